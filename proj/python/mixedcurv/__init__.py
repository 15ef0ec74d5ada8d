"""Python interface to the mixed scalar curvature engine."""

from mixedcurv._core import (
    Model,
    ModelError,
    build_model,
    builtin_names,
    closed_form_reference,
    criticality_report,
    el_residual,
    el_variants,
    frame_forms,
    identity_residuals,
    j_mix,
    level_set_quantities,
    load_model_file,
    report_json,
    s_mix,
    save_model_file,
    volume,
    __version__,
)

__all__ = [
    "Model",
    "ModelError",
    "build_model",
    "builtin_names",
    "closed_form_reference",
    "criticality_report",
    "el_residual",
    "el_variants",
    "frame_forms",
    "identity_residuals",
    "j_mix",
    "level_set_quantities",
    "load_model_file",
    "report_json",
    "s_mix",
    "save_model_file",
    "volume",
    "__version__",
]
