#include "tightlab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "tightlab/error.hpp"
#include "tightlab/majorizing.hpp"

namespace tightlab {

const char* to_string(Route r) {
  switch (r) {
    case Route::entropy: return "entropy";
    case Route::majorizing: return "majorizing";
    case Route::both: return "both";
  }
  return "unknown";
}

Route route_from_string(const std::string& s) {
  if (s == "entropy") return Route::entropy;
  if (s == "majorizing") return Route::majorizing;
  if (s == "both") return Route::both;
  throw Error(ErrorKind::ConfigError, "route must be entropy, majorizing or both, got '" + s + "'");
}

namespace {

// Typed access to one TOML table with located diagnostics and unknown-key checks.
class Section {
 public:
  Section(const toml::table* t, std::string name, std::string origin)
      : t_(t), name_(std::move(name)), origin_(std::move(origin)) {}

  bool present() const { return t_ != nullptr; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream msg;
    msg << origin_;
    if (const auto* n = node(key)) msg << ':' << n->source().begin.line;
    else if (t_) msg << ':' << t_->source().begin.line;
    msg << ": field '" << qualified(key) << "': " << what;
    throw Error(ErrorKind::ConfigError, msg.str());
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node(key) != nullptr;
  }

  std::string str(const std::string& key, std::string dflt) {
    if (!has(key)) return dflt;
    if (auto v = node(key)->value<std::string>()) return *v;
    fail(key, "expected a string");
  }

  double real(const std::string& key, double dflt) {
    if (!has(key)) return dflt;
    if (auto v = node(key)->value<double>()) return *v;  // integers convert
    fail(key, "expected a number");
  }

  std::size_t count(const std::string& key, std::size_t dflt) {
    if (!has(key)) return dflt;
    const auto* n = node(key);
    if (!n->is_integer()) fail(key, "expected a nonnegative integer");
    const auto v = n->value<std::int64_t>().value();
    if (v < 0) fail(key, "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t u64(const std::string& key) {
    const auto* n = node(key);
    if (!n->is_integer() || n->value<std::int64_t>().value() < 0) fail(key, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(n->value<std::int64_t>().value());
  }

  std::vector<double> reals(const std::string& key, std::vector<double> dflt) {
    if (!has(key)) return dflt;
    const auto* arr = node(key)->as_array();
    if (!arr) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      auto v = e.value<double>();
      if (!v) fail(key, "expected an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> dflt) {
    if (!has(key)) return dflt;
    const auto* arr = node(key)->as_array();
    if (!arr) fail(key, "expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : *arr) {
      if (!e.is_integer() || e.value<std::int64_t>().value() < 0) fail(key, "expected an array of nonnegative integers");
      out.push_back(static_cast<std::size_t>(e.value<std::int64_t>().value()));
    }
    return out;
  }

  Profile profile(const std::string& key, Profile dflt) {
    if (!has(key)) return dflt;
    if (node(key)->is_string()) return *node(key)->value<std::string>();
    return reals(key, {});
  }

  std::filesystem::path file(const std::string& key, const std::filesystem::path& base) {
    std::filesystem::path p = str(key, "");
    if (p.empty()) fail(key, "a file path is required");
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) fail(key, "file not found: " + p.string());
    return p;
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_)
      if (!seen_.count(std::string(k.str()))) {
        std::ostringstream msg;
        msg << origin_ << ':' << v.source().begin.line << ": unknown field '" << qualified(std::string(k.str())) << "'";
        throw Error(ErrorKind::ConfigError, msg.str());
      }
  }

 private:
  const toml::node* node(const std::string& key) const { return t_ ? t_->get(key) : nullptr; }
  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const toml::table* t_;
  std::string name_;
  std::string origin_;
  std::set<std::string> seen_;
};

Section section(const toml::table& root, const std::string& name, const std::string& origin,
                std::set<std::string>& used) {
  used.insert(name);
  const auto* n = root.get(name);
  if (n && !n->is_table()) {
    std::ostringstream msg;
    msg << origin << ':' << n->source().begin.line << ": '" << name << "' must be a table";
    throw Error(ErrorKind::ConfigError, msg.str());
  }
  return Section(n ? n->as_table() : nullptr, name, origin);
}

void require_nonempty(Section& s, const std::string& key, std::size_t size) {
  if (size == 0) s.fail(key, "grid must not be empty");
}

template <class T>
void require_all(Section& s, const std::string& key, const std::vector<T>& v, bool (*ok)(T), const char* what) {
  for (T x : v)
    if (!ok(x)) s.fail(key, what);
}

Scenario parse_table(const toml::table& root, const std::filesystem::path& origin, const Overrides& ov) {
  Scenario sc;
  sc.source = origin;
  const std::string where = origin.string();
  const auto base = origin.has_parent_path() ? origin.parent_path() : std::filesystem::path(".");
  std::set<std::string> used;

  Section top(&root, "", where);
  sc.name = top.str("name", origin.stem().string());
  const std::string route = top.str("route", "entropy");
  try {
    sc.route = ov.route.value_or(route_from_string(route));
  } catch (const Error&) {
    top.fail("route", "must be entropy, majorizing or both");
  }

  {
    auto s = section(root, "space", where, used);
    auto& sp = sc.space;
    sp.family = s.str("family", sp.family);
    static const std::set<std::string> families{"interval", "brownian", "torus", "product", "two-point", "file"};
    if (!families.count(sp.family)) s.fail("family", "unknown family '" + sp.family + "'");
    sp.points = s.count("points", sp.points);
    sp.dims = s.count("dims", sp.dims);
    sp.d = s.real("d", sp.d);
    sp.tol = s.real("tol", sp.tol);
    if (sp.family == "file") sp.file = s.file("file", base);
    if (sp.family != "file" && sp.family != "two-point" && sp.points < 2) s.fail("points", "need at least 2 points");
    if (sp.family == "two-point" && !(sp.d >= 0.0)) s.fail("d", "distance must be nonnegative");
    if (!(sp.tol >= 0.0)) s.fail("tol", "tolerance must be nonnegative");
    s.finish();
  }
  {
    auto s = section(root, "model", where, used);
    auto& m = sc.model;
    m.kind = s.str("kind", m.kind);
    static const std::set<std::string> kinds{"gaussian", "rademacher", "trig", "student-t"};
    if (!kinds.count(m.kind)) s.fail("kind", "unknown model kind '" + m.kind + "'");
    if (m.kind == "gaussian") {
      m.covariance = s.str("covariance", m.covariance);
      if (m.covariance == "file") m.covariance_file = s.file("covariance_file", base);
      else if (m.covariance != "brownian" && m.covariance != "identity")
        s.fail("covariance", "expected brownian, identity or file");
    } else {
      m.amplitude = s.profile("amplitude", m.amplitude);
      if (m.kind == "trig") m.phase = s.profile("phase", m.phase);
      if (m.kind == "student-t") {
        m.dof = s.real("dof", m.dof);
        if (!(m.dof > 1.0)) s.fail("dof", "degrees of freedom must exceed 1 (centred law)");
      }
      for (const auto* key : {"amplitude", "phase"})
        if (s.has(key) && s.profile(key, {}).index() == 0) {
          const auto name = std::get<std::string>(s.profile(key, {}));
          if (name != "ones" && name != "coord" && name != "zero") s.fail(key, "profile must be a list or one of ones, coord, zero");
        }
    }
    s.finish();
  }
  {
    auto s = section(root, "calculus", where, used);
    auto& c = sc.calculus;
    c.lambda_half_width = s.real("lambda_half_width", c.lambda_half_width);
    c.lambda_points = s.count("lambda_points", c.lambda_points);
    c.chi_half_width = s.real("chi_half_width", c.chi_half_width);
    c.chi_points = s.count("chi_points", c.chi_points);
    c.n_cap = s.count("n_cap", c.n_cap);
    if (!(c.lambda_half_width > 0.0)) s.fail("lambda_half_width", "must be positive");
    if (c.lambda_points < 5 || c.lambda_points % 2 == 0) s.fail("lambda_points", "need an odd count >= 5");
    if (!(c.chi_half_width >= c.lambda_half_width)) s.fail("chi_half_width", "must be >= lambda_half_width");
    if (c.chi_points < 5 || c.chi_points % 2 == 0) s.fail("chi_points", "need an odd count >= 5");
    if (c.n_cap < 1) s.fail("n_cap", "must be positive");
    s.finish();
  }
  {
    auto s = section(root, "grids", where, used);
    auto& g = sc.grids;
    g.u = s.reals("u", g.u);
    require_nonempty(s, "u", g.u.size());
    require_all<double>(s, "u", g.u, [](double x) { return x >= 0.0 && std::isfinite(x); }, "u values must be finite and >= 0");
    g.n = s.counts("n", g.n);
    require_nonempty(s, "n", g.n.size());
    require_all<std::size_t>(s, "n", g.n, [](std::size_t x) { return x > 0; }, "n values must be positive (n = 0 has no normed sum)");
    g.radii = s.reals("radii", g.radii);
    require_nonempty(s, "radii", g.radii.size());
    require_all<double>(s, "radii", g.radii, [](double x) { return x > 0.0; }, "radii must be positive");
    g.mu = s.reals("mu", g.mu);
    require_nonempty(s, "mu", g.mu.size());
    require_all<double>(s, "mu", g.mu, [](double x) { return x > 0.0; }, "mu values must be positive");
    g.x = s.reals("x", g.x);
    require_nonempty(s, "x", g.x.size());
    g.moment_lambda = s.reals("moment_lambda", g.moment_lambda);
    require_nonempty(s, "moment_lambda", g.moment_lambda.size());
    g.eps = s.reals("eps", g.eps);
    require_all<double>(s, "eps", g.eps, [](double x) { return x > 0.0; }, "eps values must be positive");
    s.finish();
  }
  {
    auto s = section(root, "mc", where, used);
    sc.mc.reps = s.count("reps", sc.mc.reps);
    if (s.has("seed")) sc.mc.seed = s.u64("seed");
    else if (!ov.seed) s.fail("seed", "a seed is required (no implicit entropy source)");
    if (ov.seed) sc.mc.seed = *ov.seed;
    if (ov.reps) sc.mc.reps = *ov.reps;
    if (sc.mc.reps < 100) s.fail("reps", "need at least 100 replications");
    s.finish();
  }
  {
    auto s = section(root, "calibration", where, used);
    auto& c = sc.calibration;
    c.c_max = s.real("c_max", c.c_max);
    c.c_min = s.real("c_min", c.c_min);
    c.cushion = s.real("stderr_cushion", c.cushion);
    if (!(c.c_min > 0.0 && c.c_max > c.c_min)) s.fail("c_max", "need 0 < c_min < c_max");
    s.finish();
  }
  if (sc.route != Route::majorizing) {
    auto s = section(root, "entropy", where, used);
    EntropySpec e;
    e.C = s.real("C", e.C);
    if (!(e.C > 0.0)) s.fail("C", "must be positive");
    e.cover = s.str("cover", e.cover);
    if (e.cover != "exact" && e.cover != "greedy" && e.cover != "automatic")
      s.fail("cover", "expected exact, greedy or automatic");
    e.exact_cap = s.count("exact_cap", e.exact_cap);
    e.refinement = s.counts("refinement", e.refinement);
    for (std::size_t m : e.refinement)
      if (m < 2) s.fail("refinement", "refinement sizes need at least 2 points");
    e.refinement_tol = s.real("refinement_tol", e.refinement_tol);
    if (!(e.refinement_tol > 0.0)) s.fail("refinement_tol", "must be positive");
    e.u = s.reals("u", e.u);
    require_all<double>(s, "u", e.u, [](double x) { return x >= 0.0 && std::isfinite(x); }, "u values must be finite and >= 0");
    e.radii = s.reals("radii", e.radii);
    require_all<double>(s, "radii", e.radii, [](double x) { return x > 0.0; }, "radii must be positive");
    s.finish();
    sc.entropy = e;
  } else {
    used.insert("entropy");
  }
  if (sc.route != Route::entropy) {
    auto s = section(root, "majorizing", where, used);
    MajorizingSpec m;
    m.phi = s.str("phi", m.phi);
    m.p = s.real("p", m.p);
    try {
      OrliczGenerator::from_name(m.phi, m.p);
    } catch (const Error& e) {
      s.fail("phi", std::string(e.what()));
    }
    m.measure = s.str("measure", m.measure);
    if (m.measure == "file") m.measure_file = s.file("measure_file", base);
    else if (m.measure != "uniform") s.fail("measure", "expected uniform or file");
    if (s.has("V")) {
      m.V = s.real("V", 1.0);
      if (!(*m.V > 0.0)) s.fail("V", "must be positive");
    }
    m.v_grid = s.reals("v_grid", m.v_grid);
    require_all<double>(s, "v_grid", m.v_grid, [](double x) { return x > 0.0; }, "V values must be positive");
    if (s.has("base_point")) m.base_point = s.count("base_point", 0);
    m.C = s.real("C", m.C);
    if (!(m.C > 0.0)) s.fail("C", "must be positive");
    m.u = s.reals("u", m.u);
    require_all<double>(s, "u", m.u, [](double x) { return x >= 0.0 && std::isfinite(x); }, "u values must be finite and >= 0");
    m.radii = s.reals("radii", m.radii);
    require_all<double>(s, "radii", m.radii, [](double x) { return x > 0.0; }, "radii must be positive");
    s.finish();
    sc.majorizing = m;
  } else {
    used.insert("majorizing");
  }
  {
    auto s = section(root, "output", where, used);
    sc.out_dir = s.str("dir", "");
    s.finish();
  }
  if (ov.out) sc.out_dir = *ov.out;
  else if (!sc.out_dir.empty() && sc.out_dir.is_relative()) sc.out_dir = base / sc.out_dir;

  // Unknown top-level keys; route sections the route does not use are not read at all.
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (key == "name" || key == "route" || used.count(key)) continue;
    std::ostringstream msg;
    msg << where << ':' << v.source().begin.line << ": unknown field '" << key << "'";
    throw Error(ErrorKind::ConfigError, msg.str());
  }
  return sc;
}

}  // namespace

Scenario parse_scenario_string(const std::string& text, const std::filesystem::path& origin,
                               const Overrides& ov) {
  toml::table root;
  try {
    root = toml::parse(text, origin.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << origin.string() << ':' << e.source().begin.line << ": " << e.description();
    throw Error(ErrorKind::ConfigError, msg.str());
  }
  Scenario sc = parse_table(root, origin, ov);
  // Fail early on spaces/models that cannot be built.
  try {
    const auto mesh = build_space(sc.space);
    build_model(sc.model, mesh);
    if (sc.majorizing && sc.majorizing->measure == "file") load_measure_csv(sc.majorizing->measure_file, mesh);
    if (sc.majorizing && sc.majorizing->base_point && *sc.majorizing->base_point >= mesh.size())
      throw Error(ErrorKind::ConfigError, "majorizing.base_point out of range");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, origin.string() + ": " + e.what());
  }
  return sc;
}

Scenario parse_scenario(const std::filesystem::path& path, const Overrides& ov) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_string(buf.str(), path, ov);
}

MetricSpace build_space(const SpaceSpec& s) { return build_space(s, s.points); }

MetricSpace build_space(const SpaceSpec& s, std::size_t points) {
  if (s.family == "interval") return interval_grid(points);
  if (s.family == "brownian") return brownian_grid(points);
  if (s.family == "torus") return torus_grid(points);
  if (s.family == "product") return product_grid(points, s.dims);
  if (s.family == "two-point") return two_point_space(s.d);
  if (s.family == "file") return load_metric_csv(s.file, s.tol);
  throw Error(ErrorKind::ConfigError, "unknown space family " + s.family);
}

namespace {

std::vector<double> resolve(const Profile& p, const MetricSpace& mesh, const char* what) {
  const std::size_t n = mesh.size();
  if (const auto* v = std::get_if<std::vector<double>>(&p)) {
    if (v->size() != n)
      throw Error(ErrorKind::ConfigError, std::string(what) + " has " + std::to_string(v->size()) +
                                              " entries, the space has " + std::to_string(n) + " points");
    return *v;
  }
  const auto& name = std::get<std::string>(p);
  if (name == "ones") return std::vector<double>(n, 1.0);
  if (name == "zero") return std::vector<double>(n, 0.0);
  if (mesh.coords().size() != n)
    throw Error(ErrorKind::ConfigError, std::string(what) + " profile 'coord' needs point coordinates");
  std::vector<double> out;
  for (const auto& c : mesh.coords()) out.push_back(c.at(0));
  return out;
}

std::vector<double> load_matrix(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> vals;
    try {
      while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      if (out.empty()) continue;  // header row
      throw Error(ErrorKind::IoError, "bad number in " + path.string());
    }
    out.insert(out.end(), vals.begin(), vals.end());
  }
  if (out.size() != n * n)
    throw Error(ErrorKind::IoError, path.string() + " is not a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  return out;
}

}  // namespace

RandomFieldModel build_model(const ModelSpec& m, const MetricSpace& mesh) {
  if (m.kind == "gaussian") {
    std::vector<double> cov;
    if (m.covariance == "brownian") cov = brownian_covariance(mesh);
    else if (m.covariance == "identity") cov = identity_covariance(mesh.size());
    else cov = load_matrix(m.covariance_file, mesh.size());
    return RandomFieldModel::gaussian(std::move(cov), mesh.size());
  }
  const auto amp = resolve(m.amplitude, mesh, "model.amplitude");
  if (m.kind == "rademacher") return RandomFieldModel::rademacher_profile(amp);
  if (m.kind == "trig") {
    auto phase = resolve(m.phase, mesh, "model.phase");
    return RandomFieldModel::trig_bounded(amp, std::move(phase));
  }
  return RandomFieldModel::student_t_profile(amp, m.dof);
}

}  // namespace tightlab
