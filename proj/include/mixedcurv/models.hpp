#pragma once

#include <filesystem>

#include "mixedcurv/model.hpp"

namespace mixedcurv {

// Built-in models.  Numeric parameters come through `params`; expression
// parameters (DT twisting functions, LevelSet scalar/metric) through
// `expr_params`.  Unknown names or out-of-range parameters throw ModelError.
//
//   FlatTorus   d (3), n (2)
//   WT          a (0.3): e^{2a cos x3}(dx1²+dx2²)+dx3², D~ = span(∂1, ∂2)
//   DT          f1 ("0.2*cos(x3)"), f2 ("0.1*cos(x1)"):
//               e^{f1}(dx1²+dx2²)+e^{f2}(dx3²+dx4²), D~ = span(∂1, ∂2)
//   CT          eps (0.5): flat 3-torus, D~ = span(∂1, ∂2+eps·cos(x1)∂3)
//   NI4         eps (0.5): flat 4-torus, D = span(∂1, ∂2+eps·cos(x1)∂3)
//               non-integrable, D~ its complement
//   SphereLeaf  chart of the round 3-sphere, dθ²+sin²θdφ²+cos²θdζ²,
//               D~ = span(∂θ, ∂φ); θ-axis a box (0.05, π/2−0.05)
//   HP          c (1.0): half-plane (2x2+c)^{−1}(dx1²+dx2²), D~ = span(∂1)
//   LevelSet    u ("x1^2-x2^2"), optional g components; D = span(grad u)
Model build_model(const std::string& name,
                  const std::map<std::string, double>& params = {},
                  const std::map<std::string, std::string>& expr_params = {});

std::vector<std::string> builtin_names();

// Evaluates an attached closed-form reference quantity (oracle channel).
double closed_form_reference(const Model& m, const std::string& quantity,
                             const double* coords);

// Plain-text config files (see README for the format).
Model load_model_file(const std::filesystem::path& path);
void save_model_file(const Model& m, const std::filesystem::path& path);

// Resolves a CLI model argument: builtin name or config file path.
Model resolve_model(const std::string& arg,
                    const std::map<std::string, double>& params = {},
                    const std::map<std::string, std::string>& eparams = {});

}  // namespace mixedcurv
