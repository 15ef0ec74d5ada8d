#include "mixedcurv/report.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mixedcurv/identities.hpp"
#include "mixedcurv/models.hpp"

namespace mixedcurv {

const char* kEngineVersion = "1.0.0";

namespace {

using nlohmann::json;

std::array<double, kMaxDim> sample_point(const Model& m, std::mt19937& rng) {
  std::array<double, kMaxDim> p{};
  for (int i = 0; i < m.dim(); ++i) {
    const AxisSpec& a = m.chart.axes[i];
    if (a.periodic) {
      std::uniform_real_distribution<double> U(0.0, a.period);
      p[i] = U(rng);
    } else {
      const double w = a.hi - a.lo;
      std::uniform_real_distribution<double> U(a.lo + 0.05 * w,
                                               a.hi - 0.05 * w);
      p[i] = U(rng);
    }
  }
  return p;
}

void add_check(RunReport& rep, const std::string& name,
               const std::string& detail, double value, double tol) {
  rep.checks.push_back({name, detail, value, tol, std::abs(value) < tol});
}

void add_info(RunReport& rep, const std::string& name,
              const std::string& detail, double value) {
  rep.checks.push_back({name, detail, value, 0.0, true});
}

RunReport base_report(const Model& m, const std::string& command,
                      double tol) {
  RunReport rep;
  rep.engine_version = kEngineVersion;
  rep.command = command;
  rep.model = m.name;
  rep.params = m.params;
  rep.tol = tol;
  return rep;
}

bool second_order_ok(const Model& m) {
  return m.dist_mode == DistMode::Span;
}

}  // namespace

bool RunReport::all_pass() const {
  for (const CheckRecord& c : checks)
    if (!c.pass) return false;
  return true;
}

bool engine_quantity(const Model& m, const std::string& name,
                     const double* x, double& out) {
  if (name == "S_mix") {
    out = s_mix(m, x, SMixMethod::FrameSum);
    return true;
  }
  if (name == "S_ex") {
    out = extrinsic_scalars(m, x).s_ex;
    return true;
  }
  if (name == "H_3") {
    out = value(second_forms(geom_first(m, x)).H[2]);
    return true;
  }
  if (name == "div_H") {
    GeomSecond G = geom_second(m, x);
    out = div_vec(G, second_forms(G).H);
    return true;
  }
  if (name == "J_integrand") {
    GeomFirst G = geom_first(m, x);
    out = frame_forms(G).s_ex() * value(G.density);
    return true;
  }
  if (name == "Gamma_1_1_3") {
    out = value(geom_first(m, x).Gamma[0][0][2]);
    return true;
  }
  if (name == "h_norm2") {
    out = frame_forms(geom_first(m, x)).h2;
    return true;
  }
  if (name == "sectional") {
    out = s_mix(m, x, SMixMethod::FrameSum) / (m.n * m.p());
    return true;
  }
  if (name == "umbilicity_defect") {
    FrameForms ff = frame_forms(geom_first(m, x));
    out = std::max(std::abs(ff.h2 - ff.H2 / m.n),
                   std::abs(ff.ht2 - ff.Ht2 / m.p()));
    return true;
  }
  if (name == "K") {
    out = surface_conformal(m, x).K;
    return true;
  }
  if (name == "phi") {
    out = surface_conformal(m, x).phi;
    return true;
  }
  if (name == "L_u") {
    out = level_set_quantities(m, x).Lu;
    return true;
  }
  return false;
}

RunReport run_evaluate(const Model& m, const double* x,
                       const std::string& quantity, double tol) {
  RunReport rep = base_report(m, "evaluate", tol);

  if (!quantity.empty()) {
    double v = 0.0;
    if (!engine_quantity(m, quantity, x, v))
      throw ModelError("no engine route for quantity '" + quantity + "'");
    rep.constants[quantity] = v;
    auto it = m.reference.find(quantity);
    if (it != m.reference.end()) {
      const double ref = closed_form_reference(m, quantity, x);
      rep.constants[quantity + "_reference"] = ref;
      add_check(rep, "reference:" + quantity, it->second.route, v - ref, tol);
    }
    return rep;
  }

  FrameForms ff = frame_forms(geom_first(m, x));
  rep.constants["h_norm2"] = ff.h2;
  rep.constants["ht_norm2"] = ff.ht2;
  rep.constants["H_norm2"] = ff.H2;
  rep.constants["Ht_norm2"] = ff.Ht2;
  rep.constants["T_norm2"] = ff.T2;
  rep.constants["Tt_norm2"] = ff.Tt2;
  rep.constants["s_ex"] = ff.s_ex();
  rep.constants["st_ex"] = ff.st_ex();
  if (second_order_ok(m))
    rep.constants["S_mix"] = s_mix(m, x, SMixMethod::FrameSum);
  if (m.scalar_u) {
    LevelSetQuantities q = level_set_quantities(m, x);
    rep.constants["tau1"] = q.tau1;
    rep.constants["tau2"] = q.tau2;
    rep.constants["levelset_residual"] = q.res_levelset;
    add_check(rep, "levelset-tau1-forms", "Weingarten route vs closed formula",
              q.tau1 - q.tau1_formula, 1e-8);
    add_check(rep, "levelset-tau2-forms", "Weingarten route vs closed formula",
              q.tau2 - q.tau2_formula, 1e-8);
  }
  for (const auto& [name, ref] : m.reference) {
    double v = 0.0;
    if (!engine_quantity(m, name, x, v)) continue;
    add_check(rep, "reference:" + name, ref.route,
              v - closed_form_reference(m, name, x), tol);
  }
  return rep;
}

RunReport run_check_identities(const Model& m, int samples, unsigned seed,
                               double tol) {
  RunReport rep = base_report(m, "check-identities", tol);
  rep.seed = seed;
  if (!second_order_ok(m))
    throw ModelError(
        "check-identities needs a span-mode model (curvature identities are "
        "second-order)");
  std::mt19937 rng(seed);
  std::vector<std::array<double, kMaxDim>> pts;
  for (int k = 0; k < samples; ++k) pts.push_back(sample_point(m, rng));
  for (const auto& [name, res] : identity_residuals(m, pts))
    add_check(rep, "identity:" + name, "max pointwise residual", res, tol);
  return rep;
}

RunReport run_integrate(const Model& m, const GridSpec& grid,
                        const std::string& functional, double tol) {
  RunReport rep = base_report(m, "integrate", tol);
  grid.validate(m);
  for (int i = 0; i < m.dim(); ++i) rep.grid = std::max(rep.grid, grid.npts[i]);
  if (functional == "vol") {
    rep.constants["vol"] = volume(m, grid);
    add_check(rep, "volume-positive", "quadrature of the density",
              rep.constants["vol"] > 0 ? 0.0 : 1.0, 0.5);
    return rep;
  }
  if (functional == "jmix") {
    const double direct = j_mix(m, grid, JMixMethod::Direct);
    rep.constants["J_mix"] = direct;
    if (m.closed()) {
      const double qform = j_mix(m, grid, JMixMethod::QForm);
      rep.constants["J_mix_qform"] = qform;
      add_check(rep, "jmix-route-agreement",
                "direct quadrature vs the divergence-free form",
                (direct - qform) / std::max(1.0, std::abs(direct)), tol);
      if (m.p() == 1 || m.n == 1) {
        const double c1 = j_mix(m, grid, JMixMethod::Codim1);
        rep.constants["J_mix_codim1"] = c1;
        add_check(rep, "jmix-codim1-agreement",
                  "direct quadrature vs the Weingarten route",
                  (direct - c1) / std::max(1.0, std::abs(direct)), tol);
      }
    } else {
      rep.notes.push_back(
          "open chart: route agreement is skipped (boundary terms)");
    }
    return rep;
  }
  if (functional == "sstar") {
    if (!m.closed())
      throw ModelError("the critical constant needs a closed model");
    GlobalMeans d = mean_and_s_star(m, grid, Side::D);
    GlobalMeans dt = mean_and_s_star(m, grid, Side::Dtilde);
    rep.constants["vol"] = d.vol;
    rep.constants["mean_S_mix"] = d.s_mix;
    rep.constants["s_star_D"] = d.s_star;
    rep.constants["s_star_Dtilde"] = dt.s_star;
    return rep;
  }
  throw ModelError("unknown functional '" + functional +
                   "' (expected jmix, vol, or sstar)");
}

RunReport run_variation_check(const Model& m, const MetricFamily& fam,
                              const GridSpec& grid, double step, double tol,
                              unsigned seed) {
  RunReport rep = base_report(m, "variation-check", tol);
  rep.seed = seed;
  grid.validate(m);

  try {
    check_family(fam, 10, seed);
    add_info(rep, "family-consistency",
             "starts at the base metric, variation adapted and truncated",
             0.0);
  } catch (const ModelError& e) {
    rep.checks.push_back(
        {"family-consistency", e.what(), 1.0, 0.5, false});
    return rep;
  }

  // pointwise first-variation formulas against finite differences in t
  std::mt19937 rng(seed);
  const double fd_tol = 1e-4;
  std::map<std::string, double> worst;
  for (int k = 0; k < 3; ++k) {
    auto pt = sample_point(m, rng);
    for (const auto& [name, res] : lemma_residuals_at(fam, pt.data())) {
      auto it = worst.find(name);
      worst[name] = it == worst.end() ? res : std::max(it->second, res);
    }
  }
  for (const auto& [name, res] : worst)
    add_check(rep, "variation:" + name, "FD vs closed first variation", res,
              fd_tol);
  if (m.closed())
    for (const auto& [name, res] : lemma_residuals_integrated(fam, grid))
      add_check(rep, "variation:" + name, "integrated norm line", res, fd_tol);

  // gradient pairing against the FD derivative of the functional
  if (m.closed()) {
    const double raw = dj_gradient_pairing(fam, grid);
    const double fd =
        fd_derivative([&](double t) { return j_mix(fam.at(t), grid); }, step)
            .value;
    rep.constants["dJ_dt"] = fd;
    add_check(rep, "gradient-pairing", "FD of the functional vs the gradient",
              (fd - raw) / std::max(1.0, std::abs(fd)), fd_tol);

    const double J0 = j_mix(m, grid);
    rep.constants["J_mix"] = J0;
    for (double t : {-0.5, 0.25, 1.0}) {
      if (std::abs(t) >= fam.eps) continue;
      std::ostringstream key;
      key << "J_ratio_t=" << t;
      rep.constants[key.str()] = j_mix(fam.at(t), grid) / J0;
    }
    if (fam.name.find("homothety") != std::string::npos && m.name == "WT" &&
        fam.side == VarSide::D) {
      // the rank-one block of this warped product carries the whole
      // functional, so J(g_t) = (1+t)^{-1/2} J(g) exactly
      double worst_law = 0.0;
      for (double t : {-0.5, 0.25, 1.0}) {
        const double ratio = j_mix(fam.at(t), grid) / J0;
        worst_law =
            std::max(worst_law, std::abs(ratio - std::pow(1.0 + t, -0.5)));
      }
      add_check(rep, "homothety-scaling",
                "J(g_t)/J(g) vs (1+t)^(-1/2) at t = -1/2, 1/4, 1",
                worst_law, 1e-9);
    }
  } else {
    rep.notes.push_back(
        "open chart: integrated variation checks are skipped");
  }
  return rep;
}

RunReport run_el_residual(const Model& m, const GridSpec& grid,
                          const std::string& variant, double tol) {
  RunReport rep = base_report(m, "el-residual", tol);
  ELResidual r = el_residual(m, grid, variant);
  rep.constants["sup_norm"] = r.sup_norm;
  rep.constants["integral_norm"] = r.integral_norm;
  rep.constants["s_star"] = r.means.s_star;
  rep.constants["vol"] = r.means.vol;
  add_check(rep, "form-agreement:" + variant,
            "extrinsic form vs partial-Ricci form", r.cross_check, 1e-6);
  add_check(rep, "critical:" + variant, "sup-norm of the residual tensor",
            r.sup_norm, tol);
  rep.notes.push_back(std::string("metric is ") +
                      (r.critical(tol) ? "critical" : "non-critical") +
                      " for variant " + variant);
  return rep;
}

RunReport run_full_report(const Model& m, const GridSpec& grid, int samples,
                          unsigned seed, double tol) {
  RunReport rep = base_report(m, "report", tol);
  rep.seed = seed;

  if (second_order_ok(m)) {
    std::mt19937 rng(seed);
    std::vector<std::array<double, kMaxDim>> pts;
    for (int k = 0; k < samples; ++k) pts.push_back(sample_point(m, rng));
    for (const auto& [name, res] : identity_residuals(m, pts))
      add_check(rep, "identity:" + name, "max pointwise residual", res, tol);

    std::mt19937 rng2(seed);
    for (const auto& [name, ref] : m.reference) {
      double worst = 0.0;
      bool have = false;
      for (int k = 0; k < std::min(samples, 20); ++k) {
        auto pt = sample_point(m, rng2);
        double v = 0.0;
        if (!engine_quantity(m, name, pt.data(), v)) break;
        have = true;
        worst = std::max(worst,
                         std::abs(v - closed_form_reference(m, name,
                                                            pt.data())));
      }
      if (have)
        add_check(rep, "reference:" + name, ref.route, worst,
                  std::max(tol, 1e-8));
    }
  }

  if (m.closed()) {
    grid.validate(m);
    const double direct = j_mix(m, grid, JMixMethod::Direct);
    const double qform = j_mix(m, grid, JMixMethod::QForm);
    rep.constants["J_mix"] = direct;
    rep.constants["vol"] = volume(m, grid);
    add_check(rep, "jmix-route-agreement",
              "direct quadrature vs the divergence-free form",
              (direct - qform) / std::max(1.0, std::abs(direct)), 1e-7);
  }

  CriticalityReport cr = criticality_report(m, grid, tol);
  if (cr.closed) {
    rep.constants["s_star_D"] = cr.means_D.s_star;
    rep.constants["s_star_Dtilde"] = cr.means_Dt.s_star;
  }
  for (const CriticalityEntry& e : cr.entries) {
    if (e.cross_check > 0.0)
      add_check(rep, "form-agreement:" + e.variant,
                "extrinsic form vs partial-Ricci form", e.cross_check, 1e-6);
    add_info(rep, "criticality:" + e.variant,
             std::string(e.critical ? "critical" : "non-critical") + " (" +
                 e.criterion + ")",
             e.sup_norm);
  }
  if (cr.has_flow_data) {
    rep.constants["flow_tau1_sup"] = cr.tau1_sup;
    rep.constants["flow_sigma2_defect"] = cr.sigma2_defect;
    rep.constants["flow_sigma2_max"] = cr.sigma2_max;
    rep.constants["flow_nabla_N_h_sup"] = cr.nabla_N_h_sup;
  }
  for (const std::string& n : cr.notes) rep.notes.push_back(n);
  return rep;
}

std::string to_json(const RunReport& rep) {
  json j;
  j["engine_version"] = rep.engine_version;
  j["command"] = rep.command;
  j["model"] = rep.model;
  j["params"] = rep.params;
  j["tol"] = rep.tol;
  j["seed"] = rep.seed;
  if (rep.grid > 0) j["grid"] = rep.grid;
  j["checks"] = json::array();
  for (const CheckRecord& c : rep.checks)
    j["checks"].push_back({{"name", c.name},
                           {"detail", c.detail},
                           {"value", c.value},
                           {"tol", c.tol},
                           {"pass", c.pass}});
  j["constants"] = rep.constants;
  j["notes"] = rep.notes;
  j["all_pass"] = rep.all_pass();
  j["timing_ms"] = rep.timing_ms;
  return j.dump(2) + "\n";
}

std::string to_text(const RunReport& rep) {
  std::ostringstream os;
  os.precision(9);
  os << rep.command << " " << rep.model << " (engine " << rep.engine_version
     << ")\n";
  for (const CheckRecord& c : rep.checks) {
    if (c.tol > 0.0)
      os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  value=" << c.value
         << "  tol=" << c.tol << "  (" << c.detail << ")\n";
    else
      os << "[info] " << c.name << "  value=" << c.value << "  (" << c.detail
         << ")\n";
  }
  for (const auto& [k, v] : rep.constants)
    os << "  " << k << " = " << v << "\n";
  for (const std::string& n : rep.notes) os << "  note: " << n << "\n";
  os << (rep.all_pass() ? "ALL CHECKS PASSED" : "CHECK FAILURES") << "\n";
  return os.str();
}

}  // namespace mixedcurv
