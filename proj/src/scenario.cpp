#include "obsyn/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "obsyn/expr.hpp"

namespace obsyn {

ControlAffineSystem holonomic_bearing_system() {
  ControlAffineSystem sys(
      2, 2, 1, [](const Vec& x) { return Vec(Vec::Zero(x.size())); },
      {[](const Vec&) { return Vec((Vec(2) << 1.0, 0.0).finished()); },
       [](const Vec&) { return Vec((Vec(2) << 0.0, 1.0).finished()); }},
      [](const Vec& x) {
        if (x[0] == 0.0) throw DomainError("bearing sensor singular at x1 = 0");
        return Vec((Vec(1) << x[1] / x[0]).finished());
      });
  sys.set_jacobians(
      [](const Vec&) { return Mat(Mat::Zero(2, 2)); },
      {[](const Vec&) { return Mat(Mat::Zero(2, 2)); },
       [](const Vec&) { return Mat(Mat::Zero(2, 2)); }},
      [](const Vec& x) {
        if (x[0] == 0.0) throw DomainError("bearing sensor singular at x1 = 0");
        Mat J(1, 2);
        J << -x[1] / (x[0] * x[0]), 1.0 / x[0];
        return J;
      });
  return sys;
}

ControlAffineSystem lti_system(const Mat& A, const Mat& B, const Mat& C) {
  const int n = static_cast<int>(A.rows());
  const int p = static_cast<int>(B.cols());
  const int m = static_cast<int>(C.rows());
  if (A.cols() != n || B.rows() != n || C.cols() != n)
    throw DimensionError("LTI matrix shapes inconsistent");
  std::vector<VectorField> fields;
  for (int i = 0; i < p; ++i)
    fields.push_back([B, i](const Vec&) { return Vec(B.col(i)); });
  ControlAffineSystem sys(
      n, p, m, [A](const Vec& x) { return Vec(A * x); }, std::move(fields),
      [C](const Vec& x) { return Vec(C * x); });
  std::vector<JacobianFn> field_jacs;
  for (int i = 0; i < p; ++i)
    field_jacs.push_back([n](const Vec&) { return Mat(Mat::Zero(n, n)); });
  sys.set_jacobians([A](const Vec&) { return A; }, std::move(field_jacs),
                    [C](const Vec&) { return C; });
  return sys;
}

ControlAffineSystem expression_system(int n, int p, int m,
                                      const std::vector<std::string>& f0,
                                      const std::vector<std::vector<std::string>>& fi,
                                      const std::vector<std::string>& h) {
  if (static_cast<int>(f0.size()) != n) throw ValidationError("f0 needs n components");
  if (static_cast<int>(fi.size()) != p) throw ValidationError("need p control fields");
  for (const auto& f : fi)
    if (static_cast<int>(f.size()) != n)
      throw ValidationError("each control field needs n components");
  if (static_cast<int>(h.size()) != m) throw ValidationError("h needs m components");

  // Vector fields depend on the state only; inputs enter through the
  // affine combination, so components are parsed with p = 0.
  using ExprVec = std::vector<expr::Expression>;
  auto parse_all = [n](const std::vector<std::string>& texts) {
    ExprVec out;
    for (const auto& t : texts) out.push_back(expr::parse(t, n, 0));
    return out;
  };
  auto jac_of = [n](const ExprVec& comps) {
    std::vector<ExprVec> rows;
    for (const auto& c : comps) {
      ExprVec row;
      for (int j = 1; j <= n; ++j)
        row.push_back(c.differentiate({expr::VarKind::State, j}));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto field_of = [](const ExprVec& comps) {
    return [comps](const Vec& x) {
      Vec v(comps.size());
      for (std::size_t i = 0; i < comps.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = comps[i].eval(x, Vec(), 0.0);
      return v;
    };
  };
  auto jac_fn_of = [n](const std::vector<ExprVec>& rows) {
    return [rows, n](const Vec& x) {
      Mat J(rows.size(), n);
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < n; ++j)
          J(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)].eval(x, Vec(), 0.0);
      return J;
    };
  };

  const ExprVec f0e = parse_all(f0);
  std::vector<ExprVec> fie;
  for (const auto& f : fi) fie.push_back(parse_all(f));
  const ExprVec he = parse_all(h);

  std::vector<VectorField> fields;
  for (const auto& f : fie) fields.push_back(field_of(f));
  ControlAffineSystem sys(n, p, m, field_of(f0e), std::move(fields), field_of(he));

  std::vector<JacobianFn> field_jacs;
  for (const auto& f : fie) field_jacs.push_back(jac_fn_of(jac_of(f)));
  sys.set_jacobians(jac_fn_of(jac_of(f0e)), std::move(field_jacs), jac_fn_of(jac_of(he)));
  return sys;
}

namespace {

using KeyMap = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

KeyMap parse_keyvalue(const std::string& text) {
  KeyMap out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError("line " + std::to_string(lineno) + ": empty key");
    out[section][key] = value;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(field + ": expected a number, got '" + s + "'");
}

Vec parse_vector(const std::string& s, const std::string& field) {
  std::istringstream in(s);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) vals.push_back(parse_double(tok, field));
  if (vals.empty()) throw ValidationError(field + ": empty vector");
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Mat parse_matrix(const std::string& s, const std::string& field) {
  std::vector<Vec> rows;
  std::string row;
  std::istringstream in(s);
  while (std::getline(in, row, ';')) rows.push_back(parse_vector(row, field));
  if (rows.empty()) throw ValidationError(field + ": empty matrix");
  Mat M(static_cast<Eigen::Index>(rows.size()), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != M.cols())
      throw ValidationError(field + ": ragged matrix rows");
    M.row(static_cast<Eigen::Index>(i)) = rows[i];
  }
  return M;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

class Reader {
 public:
  explicit Reader(KeyMap kv) : kv_(std::move(kv)) {}

  bool has(const std::string& section, const std::string& key) const {
    auto s = kv_.find(section);
    return s != kv_.end() && s->second.count(key) > 0;
  }
  std::string require(const std::string& section, const std::string& key) const {
    if (!has(section, key)) throw ValidationError(section + "." + key + " required");
    return kv_.at(section).at(key);
  }
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    return has(section, key) ? kv_.at(section).at(key) : fallback;
  }
  double get_num(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? parse_double(kv_.at(section).at(key), section + "." + key)
                             : fallback;
  }

 private:
  KeyMap kv_;
};

}  // namespace

ControlAffineSystem Scenario::build_system() const {
  if (system_type == "builtin") {
    if (builtin_name == "holonomic_bearing") return holonomic_bearing_system();
    throw ValidationError("system.name: unknown builtin '" + builtin_name + "'");
  }
  if (system_type == "lti") return lti_system(A, B, C);
  if (system_type == "expression") return expression_system(n, p, m, f0_exprs, fi_exprs, h_exprs);
  throw ValidationError("system.type must be builtin, lti or expression");
}

void Scenario::validate() const {
  const ControlAffineSystem sys = build_system();
  if (x0.size() != sys.n())
    throw ValidationError("initial.x0: dimension does not match the system");
  cost.validate(sys.n(), sys.p());
  plan.validate();
  if (std::abs(plan.boundaries.back() - cost.t_f) > 1e-9)
    throw ValidationError("plan.boundaries must end at plan.t_f");
  optimizer.validate();
  if (integrator.dt <= 0.0) throw ValidationError("integrator.dt must be positive");
  if (K0 && (K0->rows() != sys.p() || K0->cols() != sys.n()))
    throw ValidationError("optimizer.K0 must be p x n");
}

Scenario load_scenario_text(const std::string& text) {
  Reader r(parse_keyvalue(text));
  Scenario sc;
  sc.schema_version = static_cast<int>(r.get_num("", "schema_version", 1));
  if (sc.schema_version != 1)
    throw ValidationError("schema_version: only version 1 is supported");

  sc.system_type = r.require("system", "type");
  if (sc.system_type == "builtin") {
    sc.builtin_name = r.require("system", "name");
  } else if (sc.system_type == "lti") {
    sc.A = parse_matrix(r.require("system", "A"), "system.A");
    sc.B = parse_matrix(r.require("system", "B"), "system.B");
    sc.C = parse_matrix(r.require("system", "C"), "system.C");
  } else if (sc.system_type == "expression") {
    sc.n = static_cast<int>(r.get_num("system", "n", 0));
    sc.p = static_cast<int>(r.get_num("system", "p", 0));
    sc.m = static_cast<int>(r.get_num("system", "m", 0));
    if (sc.n < 1 || sc.p < 1 || sc.m < 1)
      throw ValidationError("system.n/p/m required and positive for expression systems");
    sc.f0_exprs = split_list(r.require("system", "f0"));
    for (int i = 1; i <= sc.p; ++i)
      sc.fi_exprs.push_back(split_list(r.require("system", "f" + std::to_string(i))));
    sc.h_exprs = split_list(r.require("system", "h"));
  } else {
    throw ValidationError("system.type must be builtin, lti or expression");
  }

  sc.x0 = parse_vector(r.require("initial", "x0"), "initial.x0");

  sc.cost.Q = parse_matrix(r.require("cost", "Q"), "cost.Q");
  sc.cost.R = parse_matrix(r.require("cost", "R"), "cost.R");
  sc.cost.Qf = parse_matrix(r.require("cost", "Qf"), "cost.Qf");
  sc.cost.epsilon = r.get_num("cost", "epsilon", 0.01);
  {
    std::istringstream in(r.require("cost", "zeta"));
    std::string kind;
    double value = 0.0;
    if (!(in >> kind >> value) || (kind != "fixed" && kind != "decay"))
      throw ValidationError("cost.zeta: expected 'fixed <value>' or 'decay <beta>'");
    sc.cost.zeta = kind == "fixed" ? ZetaPolicy::fixed(value) : ZetaPolicy::decay(value);
  }

  sc.cost.t_f = parse_double(r.require("plan", "t_f"), "plan.t_f");
  if (r.has("plan", "boundaries")) {
    const Vec b = parse_vector(r.require("plan", "boundaries"), "plan.boundaries");
    sc.plan.boundaries.assign(b.data(), b.data() + b.size());
  } else {
    sc.plan = SegmentPlan::uniform(sc.cost.t_f, r.get_num("plan", "segment_length", sc.cost.t_f));
  }

  sc.optimizer.mu0 = r.get_num("optimizer", "mu0", 0.1);
  sc.optimizer.grad_tol = r.get_num("optimizer", "grad_tol", 1e-4);
  sc.optimizer.max_iters = static_cast<int>(r.get_num("optimizer", "max_iters", 200));
  if (r.has("optimizer", "K0"))
    sc.K0 = parse_matrix(r.require("optimizer", "K0"), "optimizer.K0");

  sc.integrator.dt = r.get_num("integrator", "dt", 1e-3);
  sc.output_dir = r.get("output", "dir", "out");

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario_text(buf.str());
}

}  // namespace obsyn
