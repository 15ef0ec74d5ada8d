#include "mixedcurv/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mixedcurv/geometry.hpp"

namespace mixedcurv {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

Chart periodic_chart(int d) {
  Chart c;
  c.dim = d;
  for (int i = 0; i < d; ++i) c.axes[i] = AxisSpec{true, kTwoPi, 0.0, 0.0};
  return c;
}

// Validates that every free name of a bound expression is a chart variable
// (x1..xd, plus t when allowed).
void check_names(const Expr& e, int d, bool allow_t, const char* where) {
  for (const std::string& nm : e.free_names()) {
    if (nm == "t" && allow_t) continue;
    if (nm.size() == 2 && nm[0] == 'x' && nm[1] >= '1' &&
        nm[1] < static_cast<char>('1' + d))
      continue;
    throw ModelError(std::string("unknown identifier '") + nm + "' in " +
                     where);
  }
}

struct ExprModelSpec {
  std::string name;
  Chart chart;
  int n = 1;
  std::vector<std::string> upper;             // raw metric, param-symbolic
  std::vector<std::vector<std::string>> span; // raw spanning fields
  std::map<std::string, double> params;
};

Model make_expr_model(const ExprModelSpec& s) {
  Model m;
  m.name = s.name;
  m.chart = s.chart;
  m.n = s.n;
  m.params = s.params;
  const int d = s.chart.dim;
  ConfigText src;
  src.params = s.params;
  std::vector<Expr> bound_upper;
  for (const std::string& txt : s.upper) {
    Expr raw = Expr::parse(txt);
    Expr b = raw.bind(s.params);
    check_names(b, d, false, "metric");
    src.metric.push_back(raw);
    bound_upper.push_back(b);
  }
  m.metric_exprs = bound_upper;
  m.metric = metric_from_exprs(d, bound_upper);
  for (const auto& field : s.span) {
    if (static_cast<int>(field.size()) != d)
      throw ModelError("spanning field has wrong component count");
    std::array<Expr, kMaxDim> raw{}, bound{};
    for (int mu = 0; mu < d; ++mu) {
      raw[mu] = Expr::parse(field[mu]);
      bound[mu] = raw[mu].bind(s.params);
      check_names(bound[mu], d, false, "distribution");
    }
    src.span.push_back(raw);
    m.span.push_back(bound);
  }
  m.source = src;
  return m;
}

double get_param(const std::map<std::string, double>& params,
                 const std::string& key, double dflt) {
  auto it = params.find(key);
  return it == params.end() ? dflt : it->second;
}

std::string get_eparam(const std::map<std::string, std::string>& ep,
                       const std::string& key, const std::string& dflt) {
  auto it = ep.find(key);
  return it == ep.end() ? dflt : it->second;
}

void add_ref(Model& m, const std::string& name, const std::string& expr,
             const std::string& route) {
  m.reference[name] = RefEntry{Expr::parse(expr).bind(m.params), route};
}

Model build_flat_torus(const std::map<std::string, double>& params) {
  const int d = static_cast<int>(get_param(params, "d", 3));
  const int n = static_cast<int>(get_param(params, "n", 2));
  if (d < 2 || d > 4 || n < 1 || n > d - 1)
    throw ModelError("FlatTorus: need 2 <= d <= 4, 1 <= n <= d-1");
  ExprModelSpec s;
  s.name = "FlatTorus";
  s.chart = periodic_chart(d);
  s.n = n;
  s.params = {{"d", double(d)}, {"n", double(n)}};
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) s.upper.push_back(i == j ? "1" : "0");
  for (int k = 0; k < n; ++k) {
    std::vector<std::string> f(d, "0");
    f[k] = "1";
    s.span.push_back(f);
  }
  Model m = make_expr_model(s);
  add_ref(m, "S_mix", "0", "flat metric, all tensors vanish");
  return m;
}

Model build_wt(const std::map<std::string, double>& params) {
  const double a = get_param(params, "a", 0.3);
  ExprModelSpec s;
  s.name = "WT";
  s.chart = periodic_chart(3);
  s.n = 2;
  s.params = {{"a", a}};
  s.upper = {"exp(2*a*cos(x3))", "0", "0", "exp(2*a*cos(x3))", "0", "1"};
  s.span = {{"1", "0", "0"}, {"0", "1", "0"}};
  Model m = make_expr_model(s);
  // Warping function f(x3) = a cos x3; closed forms derived by hand Koszul
  // computation for e^{2f}(dx1^2+dx2^2)+dx3^2.
  add_ref(m, "Gamma_1_1_3", "-a*sin(x3)", "hand Koszul: Γ^1_{13} = f'");
  add_ref(m, "S_mix", "-2*(-a*cos(x3)+a^2*sin(x3)^2)",
          "warped-product closed form: -2(f''+f'^2)");
  add_ref(m, "S_ex", "2*a^2*sin(x3)^2", "hand Koszul: 2f'^2");
  add_ref(m, "H_3", "2*a*sin(x3)", "hand Koszul: H = -2f' ∂3");
  add_ref(m, "div_H", "2*a*cos(x3)-4*a^2*sin(x3)^2",
          "hand differentiation: -2f''-4f'^2");
  add_ref(m, "J_integrand", "2*a^2*sin(x3)^2*exp(2*a*cos(x3))",
          "hand Koszul: S_mix·density after dropping the exact divergence");
  return m;
}

Model build_dt(const std::map<std::string, std::string>& ep) {
  ExprModelSpec s;
  s.name = "DT";
  s.chart = periodic_chart(4);
  s.n = 2;
  const std::string f1 = get_eparam(ep, "f1", "0.2*cos(x3)");
  const std::string f2 = get_eparam(ep, "f2", "0.1*cos(x1)");
  s.upper = {"exp(" + f1 + ")", "0", "0", "0",
             "exp(" + f1 + ")", "0", "0",
             "exp(" + f2 + ")", "0",
             "exp(" + f2 + ")"};
  s.span = {{"1", "0", "0", "0"}, {"0", "1", "0", "0"}};
  Model m = make_expr_model(s);
  add_ref(m, "umbilicity_defect", "0",
          "double-twisted product: both families totally umbilical");
  return m;
}

Model build_ct(const std::map<std::string, double>& params) {
  const double eps = get_param(params, "eps", 0.5);
  if (std::abs(eps) >= 1.0) throw ModelError("CT: need |eps| < 1");
  ExprModelSpec s;
  s.name = "CT";
  s.chart = periodic_chart(3);
  s.n = 2;
  s.params = {{"eps", eps}};
  s.upper = {"1", "0", "0", "1", "0", "1"};
  s.span = {{"1", "0", "0"}, {"0", "1", "eps*cos(x1)"}};
  Model m = make_expr_model(s);
  // [v1, v2] = -eps sin(x1) ∂3; its D-component drives T.
  add_ref(m, "S_mix_zero_integrand_hint", "0", "flat ambient metric");
  return m;
}

Model build_ni4(const std::map<std::string, double>& params) {
  const double eps = get_param(params, "eps", 0.5);
  if (std::abs(eps) >= 1.0) throw ModelError("NI4: need |eps| < 1");
  ExprModelSpec s;
  s.name = "NI4";
  s.chart = periodic_chart(4);
  s.n = 2;
  s.params = {{"eps", eps}};
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) s.upper.push_back(i == j ? "1" : "0");
  // D = span(∂1, ∂2 + eps cos(x1) ∂3) is non-integrable; D-tilde is its
  // Euclidean complement, spanned below.
  s.span = {{"0", "-eps*cos(x1)", "1", "0"}, {"0", "0", "0", "1"}};
  Model m = make_expr_model(s);
  return m;
}

Model build_sphere_leaf() {
  ExprModelSpec s;
  s.name = "SphereLeaf";
  s.chart.dim = 3;
  s.chart.axes[0] = AxisSpec{false, 0.0, 0.05, M_PI / 2 - 0.05};
  s.chart.axes[1] = AxisSpec{true, kTwoPi, 0.0, 0.0};
  s.chart.axes[2] = AxisSpec{true, kTwoPi, 0.0, 0.0};
  s.n = 2;
  s.upper = {"1", "0", "0", "sin(x1)^2", "0", "cos(x1)^2"};
  s.span = {{"1", "0", "0"}, {"0", "1", "0"}};
  Model m = make_expr_model(s);
  add_ref(m, "h_norm2", "0", "leaves of a twisted product: totally geodesic");
  add_ref(m, "sectional", "1", "round unit sphere chart");
  return m;
}

Model build_hp(const std::map<std::string, double>& params) {
  const double c = get_param(params, "c", 1.0);
  if (c <= 0.0) throw ModelError("HP: need c > 0");
  ExprModelSpec s;
  s.name = "HP";
  s.chart.dim = 2;
  s.chart.axes[0] = AxisSpec{false, 0.0, 0.0, 1.0};
  s.chart.axes[1] = AxisSpec{false, 0.0, 0.1, 2.0};
  s.n = 1;
  s.params = {{"c", c}};
  s.upper = {"1/(2*x2+c)", "0", "1/(2*x2+c)"};
  s.span = {{"1", "0"}};
  Model m = make_expr_model(s);
  add_ref(m, "K", "0",
          "leafwise criticality expression of the conformal foliated "
          "surface vanishes on this family");
  add_ref(m, "phi", "-log(2*x2+c)", "conformal factor of the critical family");
  return m;
}

Model build_level_set(const std::map<std::string, std::string>& ep) {
  ExprModelSpec s;
  s.name = "LevelSet";
  s.chart.dim = 2;
  s.chart.axes[0] = AxisSpec{false, 0.0, 0.5, 2.0};
  s.chart.axes[1] = AxisSpec{false, 0.0, 0.5, 2.0};
  s.n = 1;  // rank of D-tilde = d - 1
  s.upper = {get_eparam(ep, "g_1_1", "1"), get_eparam(ep, "g_1_2", "0"),
             get_eparam(ep, "g_2_2", "1")};
  Model m = make_expr_model(s);
  m.dist_mode = DistMode::GradientComplement;
  const std::string u = get_eparam(ep, "u", "x1^2-x2^2");
  Expr ue = Expr::parse(u);
  check_names(ue, 2, false, "scalar u");
  m.scalar_u = ue;
  m.source->u = ue;
  if (ep.find("u") == ep.end() || u == "x1^2-x2^2") {
    add_ref(m, "L_u", "8*(x1^2-x2^2)",
            "hand arithmetic: (ux^2-uy^2)uxx + 2 ux uy uxy = 8u");
  }
  return m;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"FlatTorus", "WT", "DT", "CT", "NI4", "SphereLeaf", "HP",
          "LevelSet"};
}

Model build_model(const std::string& name,
                  const std::map<std::string, double>& params,
                  const std::map<std::string, std::string>& expr_params) {
  if (name == "FlatTorus") return build_flat_torus(params);
  if (name == "WT") return build_wt(params);
  if (name == "DT") return build_dt(expr_params);
  if (name == "CT") return build_ct(params);
  if (name == "NI4") return build_ni4(params);
  if (name == "SphereLeaf") return build_sphere_leaf();
  if (name == "HP") return build_hp(params);
  if (name == "LevelSet") return build_level_set(expr_params);
  throw ModelError("unknown model '" + name + "'");
}

double closed_form_reference(const Model& m, const std::string& quantity,
                             const double* coords) {
  auto it = m.reference.find(quantity);
  if (it == m.reference.end())
    throw ModelError("no reference data for '" + quantity + "'");
  Pt1 p = seed_point<Jet1>(coords, m.dim());
  return value(it->second.expr.evaluate<Jet1>(PtEnv<Jet1>{p}));
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

struct RawConfig {
  // section -> ordered key/value pairs
  std::vector<std::pair<std::string, std::vector<std::pair<std::string,
                                                           std::string>>>>
      sections;
};

RawConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open config file " + path.string());
  RawConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ModelError("config line " + std::to_string(lineno) +
                         ": malformed section header");
      cfg.sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos || cfg.sections.empty())
      throw ModelError("config line " + std::to_string(lineno) +
                       ": expected 'key = value' inside a section");
    cfg.sections.back().second.push_back(
        {trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
  }
  return cfg;
}

int metric_index(const std::string& key, int d, const char* section) {
  // keys g_i_j (or g_i_j(t) in [family]) for the upper triangle
  std::string k = key;
  if (k.size() > 3 && k.substr(k.size() - 3) == "(t)")
    k = k.substr(0, k.size() - 3);
  if (k.size() != 5 || k[0] != 'g' || k[1] != '_' || k[3] != '_')
    throw ModelError(std::string("unknown key '") + key + "' in [" +
                     section + "]");
  const int i = k[2] - '1', j = k[4] - '1';
  if (i < 0 || j < i || j >= d)
    throw ModelError("metric key '" + key + "' out of range");
  // row-major upper triangle offset
  int idx = 0;
  for (int r = 0; r < i; ++r) idx += d - r;
  return idx + (j - i);
}

}  // namespace

Model load_model_file(const std::filesystem::path& path) {
  RawConfig cfg = read_config(path);
  Chart chart;
  std::map<std::string, double> params;
  std::vector<std::string> metric_txt;
  std::vector<std::vector<std::string>> span_txt;
  std::optional<std::string> scalar_txt;
  std::optional<std::string> family_side;
  std::vector<std::pair<std::string, std::string>> family_kv;

  for (const auto& [sec, kvs] : cfg.sections) {
    if (sec == "chart") {
      for (const auto& [k, v] : kvs) {
        if (k == "dim") {
          chart.dim = std::stoi(v);
          if (chart.dim < 2 || chart.dim > 4)
            throw ModelError("chart dim must be 2..4");
        } else if (k.rfind("axis_", 0) == 0) {
          const int ax = std::stoi(k.substr(5)) - 1;
          if (ax < 0 || ax >= chart.dim)
            throw ModelError("axis index out of range in [chart]");
          auto parts = split(v, ' ');
          std::erase(parts, "");
          if (parts.size() == 2 && parts[0] == "periodic") {
            const double per = std::stod(parts[1]);
            if (per <= 0.0) throw ModelError("period must be positive");
            chart.axes[ax] = AxisSpec{true, per, 0.0, 0.0};
          } else if (parts.size() == 3 && parts[0] == "box") {
            const double lo = std::stod(parts[1]), hi = std::stod(parts[2]);
            if (hi <= lo) throw ModelError("degenerate axis box");
            chart.axes[ax] = AxisSpec{false, 0.0, lo, hi};
          } else {
            throw ModelError("axis spec must be 'periodic <T>' or "
                             "'box <lo> <hi>'");
          }
        } else {
          throw ModelError("unknown key '" + k + "' in [chart]");
        }
      }
    } else if (sec == "params") {
      for (const auto& [k, v] : kvs) params[k] = std::stod(v);
    } else if (sec == "metric") {
      metric_txt.assign(chart.dim * (chart.dim + 1) / 2, "");
      for (const auto& [k, v] : kvs)
        metric_txt[metric_index(k, chart.dim, "metric")] = v;
      for (const std::string& t : metric_txt)
        if (t.empty())
          throw ModelError("[metric] must list the full upper triangle");
    } else if (sec == "distribution") {
      for (const auto& [k, v] : kvs) {
        if (k.size() != 3 || k[0] != 'v' || k[1] != '_')
          throw ModelError("unknown key '" + k + "' in [distribution]");
        span_txt.push_back(split(v, ','));
      }
    } else if (sec == "scalar") {
      for (const auto& [k, v] : kvs) {
        if (k != "u")
          throw ModelError("unknown key '" + k + "' in [scalar]");
        scalar_txt = v;
      }
    } else if (sec == "family") {
      for (const auto& [k, v] : kvs) {
        if (k == "side")
          family_side = v;
        else
          family_kv.push_back({k, v});
      }
    } else {
      throw ModelError("unknown section [" + sec + "]");
    }
  }
  if (chart.dim == 0) throw ModelError("config lacks [chart] dim");
  if (metric_txt.empty()) throw ModelError("config lacks [metric]");
  if (span_txt.empty() && !scalar_txt)
    throw ModelError("config needs [distribution] or [scalar]");

  ExprModelSpec s;
  s.name = path.stem().string();
  s.chart = chart;
  s.upper = metric_txt;
  s.span = span_txt;
  s.n = static_cast<int>(span_txt.size());
  s.params = params;
  if (span_txt.empty()) s.n = chart.dim - 1;
  Model m = make_expr_model(s);
  if (scalar_txt) {
    Expr raw = Expr::parse(*scalar_txt);
    Expr b = raw.bind(params);
    check_names(b, chart.dim, false, "scalar u");
    m.scalar_u = b;
    m.source->u = raw;
    if (span_txt.empty()) m.dist_mode = DistMode::GradientComplement;
  }
  if (family_side) {
    FamilyExprSpec raw_fam, bound_fam;
    raw_fam.side = bound_fam.side = *family_side;
    raw_fam.upper.assign(metric_txt.size(), Expr::constant(0.0));
    bound_fam.upper.assign(metric_txt.size(), Expr::constant(0.0));
    std::vector<bool> seen(metric_txt.size(), false);
    for (const auto& [k, v] : family_kv) {
      const int idx = metric_index(k, chart.dim, "family");
      Expr raw = Expr::parse(v);
      Expr b = raw.bind(params);
      check_names(b, chart.dim, true, "family");
      raw_fam.upper[idx] = raw;
      bound_fam.upper[idx] = b;
      seen[idx] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (!seen[i])
        throw ModelError("[family] must list the full upper triangle");
    m.family = bound_fam;
    m.source->family = raw_fam;
  }
  return m;
}

void save_model_file(const Model& m, const std::filesystem::path& path) {
  if (!m.source)
    throw ModelError("model carries no saved expressions");
  const ConfigText& src = *m.source;
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path.string());
  const int d = m.dim();
  out << "[chart]\ndim = " << d << "\n";
  for (int i = 0; i < d; ++i) {
    const AxisSpec& a = m.chart.axes[i];
    out << "axis_" << (i + 1) << " = ";
    if (a.periodic) {
      char buf[32];
      snprintf(buf, sizeof buf, "%.17g", a.period);
      out << "periodic " << buf << "\n";
    } else {
      char lo[32], hi[32];
      snprintf(lo, sizeof lo, "%.17g", a.lo);
      snprintf(hi, sizeof hi, "%.17g", a.hi);
      out << "box " << lo << " " << hi << "\n";
    }
  }
  if (!src.params.empty()) {
    out << "[params]\n";
    for (const auto& [k, v] : src.params) {
      char buf[32];
      snprintf(buf, sizeof buf, "%.17g", v);
      out << k << " = " << buf << "\n";
    }
  }
  out << "[metric]\n";
  std::size_t idx = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      out << "g_" << (i + 1) << "_" << (j + 1) << " = "
          << src.metric[idx++].print() << "\n";
  if (!src.span.empty()) {
    out << "[distribution]\n";
    for (std::size_t k = 0; k < src.span.size(); ++k) {
      out << "v_" << (k + 1) << " = ";
      for (int mu = 0; mu < d; ++mu)
        out << (mu ? ", " : "") << src.span[k][mu].print();
      out << "\n";
    }
  }
  if (src.u) out << "[scalar]\nu = " << src.u->print() << "\n";
  if (src.family) {
    out << "[family]\nside = " << src.family->side << "\n";
    idx = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        out << "g_" << (i + 1) << "_" << (j + 1) << "(t) = "
            << src.family->upper[idx++].print() << "\n";
  }
}

Model resolve_model(const std::string& arg,
                    const std::map<std::string, double>& params,
                    const std::map<std::string, std::string>& eparams) {
  for (const std::string& nm : builtin_names())
    if (arg == nm) return build_model(arg, params, eparams);
  return load_model_file(arg);
}

}  // namespace mixedcurv
