// Python bindings: a thin layer over the C++ engine returning plain dicts
// for report-like structures.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mixedcurv/models.hpp"
#include "mixedcurv/report.hpp"

namespace py = pybind11;
using namespace mixedcurv;

namespace {

const double* checked(const Model& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.dim())
    throw ModelError("expected " + std::to_string(m.dim()) + " coordinates");
  return x.data();
}

GridSpec make_grid(const Model& m, int n) {
  return n > 0 ? GridSpec::uniform(m, n) : GridSpec::defaults(m);
}

SMixMethod smix_method(const std::string& s) {
  if (s == "frame") return SMixMethod::FrameSum;
  if (s == "trace-rD") return SMixMethod::TraceRD;
  if (s == "trace-rF") return SMixMethod::TraceRF;
  if (s == "extrinsic") return SMixMethod::Walczak;
  throw ModelError("unknown method '" + s +
                   "' (frame | trace-rD | trace-rF | extrinsic)");
}

py::dict el_dict(const ELResidual& r) {
  py::dict d;
  d["variant"] = r.variant;
  d["sup_norm"] = r.sup_norm;
  d["integral_norm"] = r.integral_norm;
  d["cross_check"] = r.cross_check;
  d["s_star"] = r.means.s_star;
  d["vol"] = r.means.vol;
  d["critical"] = r.critical();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "mixed scalar curvature engine";
  mod.attr("__version__") = kEngineVersion;

  py::register_exception<ModelError>(mod, "ModelError");

  py::class_<Model>(mod, "Model")
      .def_readonly("name", &Model::name)
      .def_readonly("n", &Model::n)
      .def_readonly("params", &Model::params)
      .def_property_readonly("dim", &Model::dim)
      .def("__repr__", [](const Model& m) {
        return "<Model " + m.name + " dim=" + std::to_string(m.dim()) +
               " n=" + std::to_string(m.n) + ">";
      });

  mod.def("builtin_names", &builtin_names);
  mod.def("build_model", &build_model, py::arg("name"),
          py::arg("params") = std::map<std::string, double>{},
          py::arg("expr_params") = std::map<std::string, std::string>{});
  mod.def("load_model_file",
          [](const std::string& p) { return load_model_file(p); });
  mod.def("save_model_file", [](const Model& m, const std::string& p) {
    save_model_file(m, p);
  });

  mod.def(
      "closed_form_reference",
      [](const Model& m, const std::string& q, const std::vector<double>& x) {
        return closed_form_reference(m, q, checked(m, x));
      },
      py::arg("model"), py::arg("quantity"), py::arg("coords"));

  mod.def(
      "s_mix",
      [](const Model& m, const std::vector<double>& x,
         const std::string& method) {
        return s_mix(m, checked(m, x), smix_method(method));
      },
      py::arg("model"), py::arg("coords"), py::arg("method") = "frame");

  mod.def(
      "frame_forms",
      [](const Model& m, const std::vector<double>& x) {
        ExtrinsicScalars es = extrinsic_scalars(m, checked(m, x));
        py::dict d;
        d["s_ex"] = es.s_ex;
        d["st_ex"] = es.st_ex;
        d["T2"] = es.T2;
        d["Tt2"] = es.Tt2;
        d["q"] = es.q;
        return d;
      },
      py::arg("model"), py::arg("coords"));

  mod.def(
      "identity_residuals",
      [](const Model& m, const std::vector<double>& x) {
        return identity_residuals_at(m, checked(m, x));
      },
      py::arg("model"), py::arg("coords"));

  mod.def(
      "volume",
      [](const Model& m, int grid) { return volume(m, make_grid(m, grid)); },
      py::arg("model"), py::arg("grid") = 0);
  mod.def(
      "j_mix",
      [](const Model& m, int grid, const std::string& method) {
        JMixMethod jm = method == "direct"   ? JMixMethod::Direct
                        : method == "qform"  ? JMixMethod::QForm
                        : method == "codim1" ? JMixMethod::Codim1
                                             : throw ModelError(
                                                   "unknown route '" +
                                                   method + "'");
        return j_mix(m, make_grid(m, grid), jm);
      },
      py::arg("model"), py::arg("grid") = 0, py::arg("method") = "direct");

  mod.def("el_variants", &el_variants, py::arg("model"));
  mod.def(
      "el_residual",
      [](const Model& m, const std::string& variant, int grid) {
        return el_dict(el_residual(m, make_grid(m, grid), variant));
      },
      py::arg("model"), py::arg("variant"), py::arg("grid") = 0);

  mod.def(
      "criticality_report",
      [](const Model& m, int grid, double tol) {
        CriticalityReport rep =
            criticality_report(m, make_grid(m, grid), tol);
        py::dict d;
        d["model"] = rep.model;
        d["closed"] = rep.closed;
        py::dict entries;
        for (const auto& e : rep.entries) {
          py::dict ed;
          ed["sup_norm"] = e.sup_norm;
          ed["integral_norm"] = e.integral_norm;
          ed["critical"] = e.critical;
          ed["criterion"] = e.criterion;
          entries[py::str(e.variant)] = ed;
        }
        d["entries"] = entries;
        if (rep.has_flow_data) {
          d["tau1_sup"] = rep.tau1_sup;
          d["sigma2_defect"] = rep.sigma2_defect;
          d["nabla_N_h_sup"] = rep.nabla_N_h_sup;
        }
        d["notes"] = rep.notes;
        return d;
      },
      py::arg("model"), py::arg("grid") = 0, py::arg("tol") = 1e-6);

  mod.def(
      "level_set_quantities",
      [](const Model& m, const std::vector<double>& x) {
        LevelSetQuantities q = level_set_quantities(m, checked(m, x));
        py::dict d;
        d["tau1"] = q.tau1;
        d["tau2"] = q.tau2;
        d["tau1_formula"] = q.tau1_formula;
        d["tau2_formula"] = q.tau2_formula;
        d["lambda"] = q.lambda;
        d["Lu"] = q.Lu;
        d["res_levelset"] = q.res_levelset;
        d["res_planar"] = q.res_planar;
        return d;
      },
      py::arg("model"), py::arg("coords"));

  mod.def(
      "report_json",
      [](const Model& m, int grid, int samples, unsigned seed, double tol) {
        return to_json(
            run_full_report(m, make_grid(m, grid), samples, seed, tol));
      },
      py::arg("model"), py::arg("grid") = 0, py::arg("samples") = 100,
      py::arg("seed") = 0, py::arg("tol") = 1e-6);
}
