#include "tightlab/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "tightlab/chaining.hpp"
#include "tightlab/error.hpp"
#include "tightlab/field_lab.hpp"
#include "tightlab/holder.hpp"
#include "tightlab/majorizing.hpp"
#include "tightlab/metric_space.hpp"
#include "tightlab/orlicz.hpp"

namespace tightlab {

const char* to_string(Command c) {
  switch (c) {
    case Command::cover: return "cover";
    case Command::calc: return "calc";
    case Command::measure: return "measure";
    case Command::simulate: return "simulate";
    case Command::verify: return "verify";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Json num(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

Json nums(const std::vector<double>& xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

std::string b2s(bool b) { return b ? "true" : "false"; }

Json profile_json(const Profile& p) {
  if (const auto* s = std::get_if<std::string>(&p)) return *s;
  return nums(std::get<std::vector<double>>(p));
}

Table matrix_table(const std::string& file, const MetricSpace& sm) {
  Table t{file, {"label"}, {}};
  for (const auto& l : sm.labels()) t.header.push_back(l);
  for (std::size_t i = 0; i < sm.size(); ++i) {
    std::vector<std::string> row{sm.labels()[i]};
    for (std::size_t j = 0; j < sm.size(); ++j) row.push_back(fmt(sm(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::size_t max_n(const std::vector<std::size_t>& ns) { return *std::max_element(ns.begin(), ns.end()); }

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Accumulates verdict state, errors and tables while a pipeline runs.
class Run {
 public:
  Run(Command cmd, const Scenario& sc, Exec exec) : cmd_(cmd), sc_(sc), exec_(exec) {}

  Report finish(Json body);

  // Runs f; a tightlab::Error becomes a recorded error and a premise failure.
  template <class F>
  bool guard(const std::string& stage, F&& f) {
    try {
      f();
      return true;
    } catch (const Error& e) {
      error(stage, e);
      return false;
    }
  }

  void error(const std::string& stage, const Error& e) {
    errors_.push_back(Json{{"stage", stage}, {"name", std::string(e.name())}, {"message", e.what()}});
    premise_fail(stage + ": " + std::string(e.name()));
  }
  void premise_fail(std::string reason) {
    premise_failed_ = true;
    reasons_.push_back(std::move(reason));
  }
  void violation(std::string reason) {
    violated_ = true;
    reasons_.push_back(std::move(reason));
  }
  void table(Table t) { tables_.push_back(std::move(t)); }

  const Scenario& sc() const { return sc_; }
  Exec exec() const { return exec_; }
  Command cmd() const { return cmd_; }
  bool with_mc() const { return cmd_ == Command::simulate || cmd_ == Command::verify; }
  bool calibrate() const { return cmd_ == Command::verify; }

 private:
  Command cmd_;
  const Scenario& sc_;
  Exec exec_;
  bool premise_failed_ = false;
  bool violated_ = false;
  std::vector<std::string> reasons_;
  Json errors_ = Json::array();
  std::vector<Table> tables_;
};

Report Run::finish(Json body) {
  Report r;
  r.exit_code = premise_failed_ ? kPremise : violated_ ? kViolation : kOk;
  Json& j = r.json;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = "tightlab";
  j["command"] = to_string(cmd_);
  j["timestamp"] = timestamp_now();
  j["scenario"] = sc_.name;
  j["config"] = scenario_json(sc_);
  j["verdict"] = Json{{"exit_code", r.exit_code},
                      {"status", r.exit_code == kOk        ? "pass"
                                 : r.exit_code == kPremise ? "premise_failure"
                                                           : "bound_violation"},
                      {"reasons", reasons_}};
  for (auto& [k, v] : body.items()) j[k] = std::move(v);
  j["errors"] = errors_;
  Json files = Json::array();
  for (const auto& t : tables_) files.push_back(t.file);
  j["tables"] = files;
  r.tables = std::move(tables_);
  return r;
}

Json space_json(const MetricSpace& mesh, const SpaceSpec& s) {
  return Json{{"family", s.family}, {"points", mesh.size()}, {"diameter", num(diameter(mesh))}};
}

Json model_json(const RandomFieldModel& m) {
  const auto b = m.bound();
  return Json{{"kind", m.kind_name()}, {"points", m.points()}, {"bounded", b.has_value()},
              {"bound", b ? num(*b) : Json(nullptr)}};
}

// ---------------------------------------------------------------- cover

Json cover_section(Run& run, const MetricSpace& mesh) {
  const auto& sc = run.sc();
  const std::size_t cap = sc.entropy ? sc.entropy->exact_cap : CoverOptions{}.exact_cap;
  const std::vector<double> eps = sc.grids.eps.empty() ? distinct_distances(mesh) : sc.grids.eps;
  const bool exact_ok = mesh.size() <= cap;
  Json rows = Json::array();
  Table t{"cover.csv", {"eps", "exact", "greedy", "entropy"}, {}};
  for (double e : eps) {
    const std::size_t greedy = covering_number(mesh, e, {CoverMode::greedy, cap});
    const std::size_t best = exact_ok ? covering_number(mesh, e, {CoverMode::exact, cap}) : greedy;
    rows.push_back(Json{{"eps", num(e)},
                        {"exact", exact_ok ? Json(best) : Json(nullptr)},
                        {"greedy", greedy},
                        {"entropy", num(std::log(static_cast<double>(best)))}});
    t.rows.push_back({fmt(e), exact_ok ? std::to_string(best) : "", std::to_string(greedy),
                      fmt(std::log(static_cast<double>(best)))});
  }
  run.table(std::move(t));
  return Json{{"exact_cap", cap}, {"exact_available", exact_ok}, {"rows", rows}};
}

// ---------------------------------------------------------------- calculus

struct Calculus {
  std::optional<LogMgfFunction> phi;
  std::optional<LogMgfFunction> chi;
  std::optional<Conjugate> chi_star;
  std::optional<YoungPair> young;
};

constexpr double kYoungZMax = 16.0;

Json cramer_json(const CramerReport& c) {
  Json rows = Json::array();
  for (const auto& r : c.rows)
    rows.push_back(Json{{"mu", num(r.mu)}, {"pass", r.pass}, {"x0", r.x0 ? num(*r.x0) : Json(nullptr)}});
  Json body{{"pass", c.pass}, {"rows", rows}, {"sup_tail", nums(c.sup_tail)}};
  if (c.analytic) return Json{{"analytic", true}, {"pass", c.pass}, {"rows", rows}};
  return Json{{"analytic", false}, {"mc", body}};
}

Json premises_section(Run& run, const RandomFieldModel& model, Calculus& calc, Json& calculus) {
  const auto& sc = run.sc();
  Json pre;
  if (run.with_mc() || model.bound()) {
    run.guard("premises.cramer", [&] {
      const auto c = cramer_check(model, sc.grids.mu, sc.grids.x, sc.mc.reps, sc.mc.seed, run.exec());
      pre["cramer"] = cramer_json(c);
      if (!c.pass) run.premise_fail("premises.cramer: exponential moment condition fails");
    });
  }
  const auto lgrid = symmetric_grid(sc.calculus.lambda_half_width, sc.calculus.lambda_points);
  std::vector<ScalarLaw> laws;
  for (std::size_t t = 0; t < model.points(); ++t) laws.push_back(model.point_law(t));
  if (!run.guard("calculus.phi", [&] { calc.phi = phi_of(laws, lgrid); })) {
    pre["mgf_finite"] = false;
    return pre;
  }
  pre["mgf_finite"] = true;
  run.guard("premises.envelope", [&] {
    const auto env = envelope_constants(*calc.phi);
    pre["envelope"] = Json{{"c1", num(env.c1)}, {"c2", num(env.c2)}};
  });
  run.guard("calculus.chi", [&] {
    ChiOptions co;
    co.n_cap = sc.calculus.n_cap;
    calc.chi = chi_function(*calc.phi, co, symmetric_grid(sc.calculus.chi_half_width, sc.calculus.chi_points));
    calc.chi_star.emplace(*calc.chi);
    calc.young = YoungPair::from_conjugate(*calc.chi_star, kYoungZMax);
  });

  calculus["lambda_grid"] = Json{{"half_width", num(sc.calculus.lambda_half_width)}, {"points", sc.calculus.lambda_points}};
  calculus["chi_grid"] = Json{{"half_width", num(sc.calculus.chi_half_width)}, {"points", sc.calculus.chi_points}};
  calculus["n_cap"] = sc.calculus.n_cap;
  {
    Table t{"phi.csv", {"lambda", "phi"}, {}};
    for (double l : calc.phi->grid()) t.rows.push_back({fmt(l), fmt((*calc.phi)(l))});
    run.table(std::move(t));
  }
  if (!calc.young) return pre;
  Json samples = Json::array();
  Table tc{"chi.csv", {"lambda", "phi", "chi", "argmax_n"}, {}};
  for (double l : calc.phi->grid()) {
    if (l < 0) continue;
    ChiOptions co;
    co.n_cap = sc.calculus.n_cap;
    const auto cv = chi_of(*calc.phi, l, co);
    tc.rows.push_back({fmt(l), fmt((*calc.phi)(l)), fmt(cv.value), std::to_string(cv.argmax_n)});
  }
  for (double l : {0.5, 1.0, 2.0}) {
    if (l > calc.phi->grid_max()) continue;
    ChiOptions co;
    co.n_cap = sc.calculus.n_cap;
    const auto cv = chi_of(*calc.phi, l, co);
    samples.push_back(Json{{"lambda", l}, {"phi", num((*calc.phi)(l))}, {"chi", num(cv.value)}, {"argmax_n", cv.argmax_n}});
  }
  run.table(std::move(tc));
  Table ts{"chi_star.csv", {"x", "chi_star", "lower_bound"}, {}};
  for (int i = 0; i <= 64; ++i) {
    const double x = kYoungZMax * i / 64.0;
    const auto v = (*calc.chi_star)(x);
    ts.rows.push_back({fmt(x), fmt(v.value), b2s(v.lower_bound)});
  }
  run.table(std::move(ts));
  calculus["samples"] = samples;
  Json yinv = Json::array();
  for (double u : {1.0, 10.0, 100.0, 1000.0}) yinv.push_back(Json{{"u", u}, {"young_inverse", num(calc.young->inverse(u))}});
  calculus["young"] = Json{{"z_max", kYoungZMax}, {"inverse", yinv}};
  return pre;
}

// ---------------------------------------------------------------- MC verification shared by both routes

Json mc_block(Run& run, const std::string& route, const RandomFieldModel& model, const MetricSpace& rho,
              const HolderModulus& hm, const std::vector<double>& u, const std::vector<double>& radii,
              double config_C, const Calculus& calc, Json& section) {
  const auto& sc = run.sc();
  // Deterministic bound values at the configured C.
  Json cfg = Json::array();
  for (std::size_t n : sc.grids.n)
    for (double uu : u) {
      const auto tb = tail_bound(uu, n, config_C, *calc.chi_star);
      cfg.push_back(Json{{"u", num(uu)}, {"n", n}, {"bound", num(tb.value)}, {"lower_flag", tb.lower_flag}});
    }
  section["config_C"] = num(config_C);
  section["bound_at_config_C"] = cfg;
  if (!run.with_mc()) return nullptr;

  Json mc;
  run.guard(route + ".mc.tail", [&] {
    const auto cells = mc_tail_table(model, rho, u, sc.grids.n, sc.mc.reps, sc.mc.seed, run.exec());
    Json tab = Json::array();
    for (const auto& c : cells)
      tab.push_back(Json{{"u", num(c.u)}, {"n", c.n}, {"exceed", c.exceed}, {"reps", c.reps}, {"p", num(c.p)}, {"se", num(c.se)}});
    mc["tail_table"] = tab;
    if (run.calibrate()) {
      CalibrationOptions co;
      co.c_max = sc.calibration.c_max;
      co.c_min = sc.calibration.c_min;
      co.stderr_cushion = sc.calibration.cushion;
      const auto cal = calibrate_C(cells, *calc.chi_star, co);
      Json viol = Json::array();
      for (std::size_t i : cal.violations) viol.push_back(Json{{"u", num(cells[i].u)}, {"n", cells[i].n}});
      mc["calibration"] = Json{{"C", num(cal.C)}, {"saturated", cal.saturated}, {"violations", viol}};
      if (!cal.violations.empty()) run.violation(route + ": tail bound violated at the calibration floor");
      Table t{"tail_" + route + ".csv", {"u", "n", "bound", "empirical", "stderr"}, {}};
      Json bounds = Json::array();
      for (const auto& c : cells) {
        const double b = tail_bound(c.u, c.n, cal.C, *calc.chi_star).value;
        const bool dom = b >= c.p - 2.0 * c.se;
        bounds.push_back(Json{{"u", num(c.u)}, {"n", c.n}, {"bound", num(b)}, {"empirical", num(c.p)},
                              {"stderr", num(c.se)}, {"dominates", dom}});
        t.rows.push_back({fmt(c.u), std::to_string(c.n), fmt(b), fmt(c.p), fmt(c.se)});
      }
      mc["bounds"] = bounds;
      run.table(std::move(t));
    } else {
      Table t{"tail_" + route + ".csv", {"u", "n", "empirical", "stderr"}, {}};
      for (const auto& c : cells) t.rows.push_back({fmt(c.u), std::to_string(c.n), fmt(c.p), fmt(c.se)});
      run.table(std::move(t));
    }
  });

  run.guard(route + ".mc.rates", [&] {
    ExitSpec es;
    es.kind = ExitSpec::Kind::holder_ball;
    es.radii = radii;
    es.modulus = hm;
    const auto rt = etc_rate_estimate(model, es, sc.grids.n, sc.mc.reps, sc.mc.seed, run.exec());
    Json cells = Json::array();
    Table t{"rates_" + route + ".csv", {"n", "radius", "exits", "reps", "p", "stderr", "rate", "censored"}, {}};
    for (const auto& c : rt.cells) {
      cells.push_back(Json{{"n", c.n}, {"radius", num(c.radius)}, {"exits", c.exits}, {"reps", c.reps}, {"p", num(c.p)},
                           {"se", num(c.se)}, {"rate", num(c.rate)}, {"censored", c.censored}});
      t.rows.push_back({std::to_string(c.n), fmt(c.radius), std::to_string(c.exits), std::to_string(c.reps), fmt(c.p),
                        fmt(c.se), fmt(c.rate), b2s(c.censored)});
    }
    Json trend = Json::array();
    for (std::size_t i = 0; i < radii.size(); ++i)
      trend.push_back(Json{{"radius", num(radii[i])}, {"monotone", static_cast<bool>(rt.monotone_trend[i])}});
    mc["rates"] = Json{{"exit_set", "holder_ball"}, {"cells", cells}, {"all_censored", rt.all_censored}, {"monotone_trend", trend}};
    run.table(std::move(t));
  });

  run.guard(route + ".mc.moments", [&] {
    Statistic st;
    st.kind = Statistic::Kind::holder_norm;
    st.n = max_n(sc.grids.n);
    st.modulus = hm;
    const auto rows = exp_moment_check(model, st, sc.grids.moment_lambda, sc.mc.reps, sc.mc.seed, run.exec());
    Json out = Json::array();
    for (const auto& r : rows)
      out.push_back(Json{{"lambda", num(r.lambda)}, {"estimate", num(r.estimate)}, {"se", num(r.se)},
                         {"estimate_2x", num(r.estimate_2x)}, {"stable", r.stable}, {"overflow", r.overflow}});
    mc["moments"] = Json{{"statistic", "holder_norm"}, {"n", st.n}, {"rows", out}};

    const std::size_t shown = std::min<std::size_t>(sc.mc.reps, 1000);
    const auto norms = statistic_sample(model, st, shown, sc.mc.seed, run.exec());
    Table t{"holder_norms_" + route + ".csv", {"path", "norm"}, {}};
    for (double r : radii) t.header.push_back("in_ball_" + fmt(r));
    for (std::size_t i = 0; i < norms.size(); ++i) {
      std::vector<std::string> row{std::to_string(i), fmt(norms[i])};
      for (double r : radii) row.push_back(b2s(norms[i] <= r));
      t.rows.push_back(std::move(row));
    }
    run.table(std::move(t));
  });
  return mc;
}

// ---------------------------------------------------------------- entropy route

struct EntropyCore {
  std::optional<MetricSpace> d;
  double sigma = 0.0;
  double J = kInf;
};

EntropyCore entropy_core(const RandomFieldModel& model, const MetricSpace& mesh, const Calculus& calc,
                         const CoverOptions& cover, Exec exec) {
  EntropyCore c;
  c.d = natural_distance(model, mesh, *calc.chi, NormOptions{}, exec);
  c.sigma = sigma_of(model, *calc.chi);
  c.J = entropy_integral(*c.d, *calc.young, c.sigma, cover).value;
  return c;
}

CoverOptions cover_options(const EntropySpec& e) {
  const CoverMode m = e.cover == "exact" ? CoverMode::exact : e.cover == "greedy" ? CoverMode::greedy : CoverMode::automatic;
  return {m, e.exact_cap};
}

Json entropy_section(Run& run, const MetricSpace& mesh, const RandomFieldModel& model, const Calculus& calc) {
  const auto& sc = run.sc();
  const auto& es = *sc.entropy;
  const auto cover = cover_options(es);
  Json out;
  out["norm"] = "B(chi)";
  out["cover"] = es.cover;
  EntropyCore core;
  if (!run.guard("entropy.J", [&] { core = entropy_core(model, mesh, calc, cover, run.exec()); })) return out;
  out["sigma"] = num(core.sigma);
  out["d_phi_diameter"] = num(diameter(*core.d));
  out["J"] = num(core.J);
  run.table(matrix_table("d_phi.csv", *core.d));
  if (!std::isfinite(core.J)) {
    run.premise_fail("entropy: J is not finite");
    return out;
  }

  // Convergence of J under mesh refinement (generated families only).
  Json ref;
  const bool refinable = sc.space.family != "file" && sc.space.family != "two-point";
  if (!refinable) {
    ref = Json{{"applicable", false}};
  } else {
    std::vector<std::size_t> sizes = es.refinement;
    if (sizes.empty())
      for (std::size_t k : {sc.space.points / 4, sc.space.points / 2})
        if (k >= 2) sizes.push_back(k);
    Json levels = Json::array();
    std::optional<double> previous;
    bool ok = run.guard("entropy.refinement", [&] {
      for (std::size_t m : sizes) {
        const auto mesh_m = build_space(sc.space, m);
        const auto model_m = build_model(sc.model, mesh_m);
        const double Jm = entropy_core(model_m, mesh_m, calc, cover, run.exec()).J;
        levels.push_back(Json{{"points", mesh_m.size()}, {"J", num(Jm)}});
        previous = Jm;
      }
    });
    levels.push_back(Json{{"points", mesh.size()}, {"J", num(core.J)}});
    ref = Json{{"applicable", true}, {"levels", levels}, {"tol", num(es.refinement_tol)}};
    if (ok && previous) {
      const double rel = std::abs(core.J - *previous) / core.J;
      ref["rel_change"] = num(rel);
      ref["converged"] = rel <= es.refinement_tol;
      if (rel > es.refinement_tol) run.premise_fail("entropy: J diverges under refinement");
    }
    if (!ok || !ref.value("converged", true)) {
      out["refinement"] = ref;
      return out;
    }
  }
  out["refinement"] = ref;

  std::optional<MetricSpace> rho;
  if (!run.guard("entropy.rho_J", [&] { rho = chaining_modulus(*core.d, *calc.young, cover); })) return out;
  out["rho_J_diameter"] = num(diameter(*rho));
  run.table(matrix_table("rho_J.csv", *rho));
  const auto hm = modulus_from(ModulusRoute::chaining, *rho);
  out["holder_base_point"] = hm.base_point;
  const auto& u = es.u.empty() ? sc.grids.u : es.u;
  const auto& radii = es.radii.empty() ? sc.grids.radii : es.radii;
  out["u_grid"] = nums(u);
  out["radii"] = nums(radii);
  Json mc = mc_block(run, "entropy", model, *rho, hm, u, radii, es.C, calc, out);
  if (!mc.is_null()) out["mc"] = mc;
  return out;
}

// ---------------------------------------------------------------- majorizing route

struct MajorizingCore {
  std::optional<OrliczGenerator> phi;
  std::optional<MetricSpace> d;
  std::optional<MetricSpace> w;
  std::size_t base_point = 0;
  bool usable = false;
};

Json majorizing_core(Run& run, const MetricSpace& mesh, const RandomFieldModel& model, MajorizingCore& core) {
  const auto& ms = *run.sc().majorizing;
  Json out;
  out["phi"] = ms.phi;
  if (ms.phi == "power-exp") out["p"] = num(ms.p);
  if (!run.guard("majorizing.phi", [&] { core.phi = OrliczGenerator::from_name(ms.phi, ms.p); })) return out;
  BasePoint bp{};
  if (!run.guard("majorizing.base_point", [&] { bp = base_point_check(model, *core.phi); })) return out;
  core.base_point = ms.base_point.value_or(bp.point);
  out["base_point"] = Json{{"argmin", bp.point}, {"norm", num(bp.norm)}, {"used", core.base_point},
                           {"label", mesh.labels()[core.base_point]}};
  if (!run.guard("majorizing.d_phi", [&] { core.d = natural_distance(model, mesh, *core.phi, run.exec()); })) return out;
  const double D = diameter(*core.d);
  out["d_phi_diameter"] = num(D);
  run.table(matrix_table("d_Phi.csv", *core.d));
  if (!(D > 0.0) || !std::isfinite(D)) {
    run.premise_fail("majorizing: d_Phi diameter must be positive and finite");
    return out;
  }
  std::optional<PointMeasure> m;
  if (!run.guard("majorizing.measure", [&] {
        m = ms.measure == "file" ? load_measure_csv(ms.measure_file, mesh) : PointMeasure::uniform(mesh.size());
      }))
    return out;
  out["measure"] = ms.measure;
  Classification cls{};
  if (!run.guard("majorizing.classify", [&] { cls = classify_measure(*m, *core.d, *core.phi, ms.v_grid); })) return out;
  Json inf_pairs = Json::array();
  for (auto [a, b] : cls.infinite_pairs) inf_pairs.push_back(Json::array({mesh.labels()[a], mesh.labels()[b]}));
  out["classification"] = Json{{"class", to_string(cls.cls)}, {"sup_w", num(cls.sup_w)}, {"v_grid", nums(cls.v_grid)},
                               {"infinite_pairs", inf_pairs}};
  if (cls.cls != MeasureClass::majorizing) {
    run.premise_fail("majorizing: measure is not majorizing");
    return out;
  }
  const double V = ms.V.value_or(D);
  out["V"] = num(V);
  if (!run.guard("majorizing.w", [&] { core.w = w_matrix(*core.d, *m, *core.phi, V, run.exec()); })) return out;
  out["w_diameter"] = num(diameter(*core.w));
  run.table(matrix_table("w.csv", *core.w));
  core.usable = true;
  return out;
}

Json majorizing_section(Run& run, const MetricSpace& mesh, const RandomFieldModel& model, const Calculus* calc) {
  const auto& sc = run.sc();
  const auto& ms = *sc.majorizing;
  MajorizingCore core;
  Json out = majorizing_core(run, mesh, model, core);
  if (!core.usable || !calc || !calc->young) return out;
  const auto hm = modulus_from(ModulusRoute::majorizing, *core.w, core.base_point);
  const auto& u = ms.u.empty() ? sc.grids.u : ms.u;
  const auto& radii = ms.radii.empty() ? sc.grids.radii : ms.radii;
  out["u_grid"] = nums(u);
  out["radii"] = nums(radii);
  Json mc = mc_block(run, "majorizing", model, *core.w, hm, u, radii, ms.C, *calc, out);
  if (run.with_mc()) {
    run.guard("majorizing.mc.theta", [&] {
      const auto e = sample_ensemble(model, sc.mc.reps, sc.mc.seed, run.exec());
      const auto theta = theta_factorization(e, *core.w, run.exec());
      RandomSample half{std::vector<double>(theta.values.begin(), theta.values.begin() + theta.values.size() / 2), theta.seed};
      const double full = luxemburg_norm(theta, *core.phi);
      const double h = luxemburg_norm(half, *core.phi);
      const bool stable = std::isfinite(full) && std::abs(full - h) <= 0.2 * full;
      mc["theta"] = Json{{"luxemburg_norm", num(full)}, {"luxemburg_norm_half", num(h)}, {"finite", std::isfinite(full)},
                         {"stable", stable}};
      if (!std::isfinite(full)) run.premise_fail("majorizing: theta has infinite Orlicz norm");
    });
  }
  if (!mc.is_null()) out["mc"] = mc;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- public API

std::string Table::csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

Json scenario_json(const Scenario& sc) {
  Json j;
  j["name"] = sc.name;
  j["route"] = to_string(sc.route);
  Json sp{{"family", sc.space.family}};
  if (sc.space.family == "file") sp["file"] = sc.space.file.filename().string();
  else if (sc.space.family == "two-point") sp["d"] = num(sc.space.d);
  else sp["points"] = sc.space.points;
  if (sc.space.family == "product") sp["dims"] = sc.space.dims;
  sp["tol"] = num(sc.space.tol);
  j["space"] = sp;
  Json md{{"kind", sc.model.kind}};
  if (sc.model.kind == "gaussian") {
    md["covariance"] = sc.model.covariance;
    if (sc.model.covariance == "file") md["covariance_file"] = sc.model.covariance_file.filename().string();
  } else {
    md["amplitude"] = profile_json(sc.model.amplitude);
    if (sc.model.kind == "trig") md["phase"] = profile_json(sc.model.phase);
    if (sc.model.kind == "student-t") md["dof"] = num(sc.model.dof);
  }
  j["model"] = md;
  j["calculus"] = Json{{"lambda_half_width", num(sc.calculus.lambda_half_width)},
                       {"lambda_points", sc.calculus.lambda_points},
                       {"chi_half_width", num(sc.calculus.chi_half_width)},
                       {"chi_points", sc.calculus.chi_points},
                       {"n_cap", sc.calculus.n_cap}};
  j["grids"] = Json{{"u", nums(sc.grids.u)},         {"n", sc.grids.n},
                    {"radii", nums(sc.grids.radii)}, {"mu", nums(sc.grids.mu)},
                    {"x", nums(sc.grids.x)},         {"moment_lambda", nums(sc.grids.moment_lambda)},
                    {"eps", nums(sc.grids.eps)}};
  j["mc"] = Json{{"reps", sc.mc.reps}, {"seed", sc.mc.seed}};
  j["calibration"] = Json{{"c_max", num(sc.calibration.c_max)}, {"c_min", num(sc.calibration.c_min)},
                          {"stderr_cushion", num(sc.calibration.cushion)}};
  if (sc.entropy) {
    const auto& e = *sc.entropy;
    j["entropy"] = Json{{"C", num(e.C)},         {"cover", e.cover},      {"exact_cap", e.exact_cap},
                        {"refinement", e.refinement}, {"refinement_tol", num(e.refinement_tol)},
                        {"u", nums(e.u)},        {"radii", nums(e.radii)}};
  }
  if (sc.majorizing) {
    const auto& m = *sc.majorizing;
    Json mj{{"phi", m.phi}, {"p", num(m.p)}, {"measure", m.measure}};
    if (m.measure == "file") mj["measure_file"] = m.measure_file.filename().string();
    mj["V"] = m.V ? num(*m.V) : Json(nullptr);
    mj["v_grid"] = nums(m.v_grid);
    mj["base_point"] = m.base_point ? Json(*m.base_point) : Json(nullptr);
    mj["C"] = num(m.C);
    mj["u"] = nums(m.u);
    mj["radii"] = nums(m.radii);
    j["majorizing"] = mj;
  }
  return j;
}

Report run(Command cmd, const Scenario& sc, Exec exec) {
  Run run(cmd, sc, exec);
  Json body;
  std::optional<MetricSpace> mesh;
  std::optional<RandomFieldModel> model;
  if (!run.guard("space", [&] { mesh = build_space(sc.space); })) return run.finish(std::move(body));
  body["space"] = space_json(*mesh, sc.space);

  if (cmd == Command::cover) {
    body["cover"] = cover_section(run, *mesh);
    return run.finish(std::move(body));
  }
  if (!run.guard("model", [&] { model = build_model(sc.model, *mesh); })) return run.finish(std::move(body));
  body["model"] = model_json(*model);

  if (cmd == Command::measure) {
    if (!sc.majorizing) throw Error(ErrorKind::ConfigError, "measure needs route majorizing or both");
    MajorizingCore core;
    body["majorizing"] = majorizing_core(run, *mesh, *model, core);
    return run.finish(std::move(body));
  }

  Calculus calc;
  Json calculus;
  body["premises"] = premises_section(run, *model, calc, calculus);
  body["calculus"] = calculus;
  const bool ready = calc.young.has_value();
  if (sc.entropy && ready) body["entropy"] = entropy_section(run, *mesh, *model, calc);
  if (sc.majorizing) body["majorizing"] = majorizing_section(run, *mesh, *model, ready ? &calc : nullptr);
  if (cmd == Command::simulate) {
    const auto e = sample_ensemble(*model, std::min<std::size_t>(sc.mc.reps, 200), sc.mc.seed, exec);
    Table t{"ensemble.csv", {}, {}};
    t.header = mesh->labels();
    for (std::size_t i = 0; i < e.count; ++i) {
      std::vector<std::string> row;
      for (double x : e.path(i)) row.push_back(fmt(x));
      t.rows.push_back(std::move(row));
    }
    run.table(std::move(t));
    body["ensemble"] = Json{{"mc", Json{{"paths_written", e.count}, {"stream_rule", Ensemble::stream_rule}}}};
  }
  return run.finish(std::move(body));
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

void write_report(const Report& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + (dir / name).string());
    out << text;
  };
  put("report.json", dump_report(r.json));
  for (const auto& t : r.tables) put(t.file, t.csv());
}

Json load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open report " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IoError, path.string() + ": " + e.what());
  }
}

namespace {

std::string show(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void diff_walk(const Json& a, const Json& b, const std::string& path, bool in_mc, double tol, DiffResult& out) {
  auto add = [&](std::string pa, std::string pb, bool close) {
    out.entries.push_back({path.empty() ? "/" : path, std::move(pa), std::move(pb), in_mc, close});
  };
  if (a.is_object() && b.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (path.empty() && k == "timestamp") continue;
      const std::string p = path + "/" + k;
      if (!b.contains(k)) out.entries.push_back({p, show(v), "<missing>", in_mc || k == "mc", false});
      else diff_walk(v, b.at(k), p, in_mc || k == "mc", tol, out);
    }
    for (const auto& [k, v] : b.items())
      if (!a.contains(k) && !(path.empty() && k == "timestamp"))
        out.entries.push_back({path + "/" + k, "<missing>", show(v), in_mc || k == "mc", false});
    return;
  }
  if (a.is_array() && b.is_array()) {
    if (a.size() != b.size()) add("length " + std::to_string(a.size()), "length " + std::to_string(b.size()), false);
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
      diff_walk(a[i], b[i], path + "/" + std::to_string(i), in_mc, tol, out);
    return;
  }
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (x == y && a.is_number_float() == b.is_number_float()) return;
    add(a.dump(), b.dump(), std::abs(x - y) <= tol * std::max(std::abs(x), std::abs(y)));
    return;
  }
  if (a != b) add(show(a), show(b), false);
}

}  // namespace

DiffResult diff_reports(const Json& a, const Json& b, double rel_tol) {
  DiffResult r;
  const Json va = a.value("schema_version", Json(nullptr)), vb = b.value("schema_version", Json(nullptr));
  r.schema_mismatch = va != vb;
  diff_walk(a, b, "", false, rel_tol, r);
  r.same = r.entries.empty();
  for (const auto& e : r.entries)
    if (!e.mc) ++r.non_mc_differences;
  return r;
}

std::string DiffResult::text() const {
  std::ostringstream out;
  if (schema_mismatch) out << "schema_version mismatch: comparing shared fields only\n";
  for (const auto& e : entries) {
    out << (e.mc ? "[mc]     " : "[non-mc] ") << e.path << ": " << e.a << " -> " << e.b;
    if (e.close) out << " (close)";
    out << '\n';
  }
  if (same) out << "verdict: same\n";
  else out << "verdict: different (" << entries.size() << " fields, " << non_mc_differences << " outside mc)\n";
  return out.str();
}

}  // namespace tightlab
