// Command-line driver: machine-readable verification reports for the
// mixed-curvature engine.  Exit codes: 0 all checks pass, 1 check failures,
// 2 usage/model errors.
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mixedcurv/models.hpp"
#include "mixedcurv/report.hpp"

using namespace mixedcurv;

namespace {

struct Common {
  std::string model_arg;
  std::vector<std::string> params;
  double tol = 1e-6;
  std::string json_path;
  int grid = 0;
  unsigned seed = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("model", c.model_arg, "builtin name or config file path")
      ->required();
  cmd->add_option("--param", c.params,
                  "model parameter k=v (numeric or expression), repeatable");
  cmd->add_option("--tol", c.tol, "check tolerance");
  cmd->add_option("--json", c.json_path,
                  "write the JSON report here ('-' for stdout)");
  cmd->add_option("--grid", c.grid, "quadrature points per axis");
  cmd->add_option("--seed", c.seed, "random-sample seed");
}

Model make_model(const Common& c) {
  std::map<std::string, double> params;
  std::map<std::string, std::string> eparams;
  for (const std::string& kv : c.params) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ModelError("--param expects k=v, got '" + kv + "'");
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    char* end = nullptr;
    const double num = std::strtod(v.c_str(), &end);
    if (end && *end == '\0' && end != v.c_str())
      params[k] = num;
    else
      eparams[k] = v;
  }
  return resolve_model(c.model_arg, params, eparams);
}

GridSpec make_grid(const Model& m, const Common& c) {
  return c.grid > 0 ? GridSpec::uniform(m, c.grid) : GridSpec::defaults(m);
}

std::vector<double> parse_point(const Model& m, const std::string& at) {
  std::vector<double> x;
  std::stringstream ss(at);
  std::string item;
  while (std::getline(ss, item, ',')) x.push_back(std::stod(item));
  if (static_cast<int>(x.size()) != m.dim())
    throw ModelError("--at needs " + std::to_string(m.dim()) +
                     " comma-separated coordinates");
  return x;
}

int emit(RunReport rep, const Common& c, double ms) {
  rep.timing_ms = ms;
  if (c.json_path == "-") {
    std::cout << to_json(rep);
  } else {
    if (!c.json_path.empty()) {
      std::ofstream out(c.json_path);
      if (!out) throw ModelError("cannot write " + c.json_path);
      out << to_json(rep);
    }
    std::cout << to_text(rep);
  }
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed scalar curvature engine"};
  app.require_subcommand(1);

  Common c_eval, c_ident, c_integ, c_var, c_el, c_rep;
  std::string at, quantity, functional = "jmix", family, variant, side = "D";
  int samples = 100;
  double step = 1e-3;

  CLI::App* eval = app.add_subcommand("evaluate", "pointwise tensors");
  add_common(eval, c_eval);
  eval->add_option("--at", at, "point x1,x2,...")->required();
  eval->add_option("--quantity", quantity, "single quantity to evaluate");

  CLI::App* ident =
      app.add_subcommand("check-identities", "curvature identity residuals");
  add_common(ident, c_ident);
  ident->add_option("--samples", samples, "number of random points");

  CLI::App* integ = app.add_subcommand("integrate", "global functionals");
  add_common(integ, c_integ);
  integ->add_option("--functional", functional, "jmix | vol | sstar");

  CLI::App* var =
      app.add_subcommand("variation-check", "first-variation formulas");
  add_common(var, c_var);
  var->add_option("--family", family, "static | homothety | config file")
      ->required();
  var->add_option("--side", side, "varied side for builtin families (D|Dt)");
  var->add_option("--step", step, "FD step in t");

  CLI::App* el =
      app.add_subcommand("el-residual", "Euler-Lagrange residual tensors");
  add_common(el, c_el);
  el->add_option("--variant", variant, "equation variant")->required();

  CLI::App* rep = app.add_subcommand("report", "everything applicable");
  add_common(rep, c_rep);
  rep->add_option("--samples", samples, "number of random points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::ostringstream os;
    app.exit(e, os, os);
    std::cerr << os.str();
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };

  try {
    if (eval->parsed()) {
      Model m = make_model(c_eval);
      std::vector<double> x = parse_point(m, at);
      return emit(run_evaluate(m, x.data(), quantity, c_eval.tol), c_eval,
                  ms());
    }
    if (ident->parsed()) {
      Model m = make_model(c_ident);
      return emit(
          run_check_identities(m, samples, c_ident.seed, c_ident.tol),
          c_ident, ms());
    }
    if (integ->parsed()) {
      Model m = make_model(c_integ);
      return emit(run_integrate(m, make_grid(m, c_integ), functional,
                                c_integ.tol),
                  c_integ, ms());
    }
    if (var->parsed()) {
      Model m = make_model(c_var);
      MetricFamily fam;
      if (family == "static" || family == "homothety") {
        const VarSide vs = side == "Dt" || side == "Dtilde"
                               ? VarSide::Dtilde
                               : VarSide::D;
        fam = builtin_family(m, family, vs);
      } else {
        Model fm = load_model_file(family);
        if (!fm.family)
          throw ModelError("config file '" + family +
                           "' declares no [family]");
        m = fm;
        fam = family_from_model(fm);
      }
      return emit(run_variation_check(m, fam, make_grid(m, c_var), step,
                                      c_var.tol, c_var.seed),
                  c_var, ms());
    }
    if (el->parsed()) {
      Model m = make_model(c_el);
      return emit(
          run_el_residual(m, make_grid(m, c_el), variant, c_el.tol), c_el,
          ms());
    }
    if (rep->parsed()) {
      Model m = make_model(c_rep);
      return emit(run_full_report(m, make_grid(m, c_rep), samples,
                                  c_rep.seed, c_rep.tol),
                  c_rep, ms());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
