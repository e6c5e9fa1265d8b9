#include "tightlab/field_lab.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "parallel.hpp"
#include "tightlab/error.hpp"
#include "tightlab/rng.hpp"

namespace tightlab {

// ---------------------------------------------------------------------------
// Model

RandomFieldModel RandomFieldModel::gaussian(std::vector<double> covariance, std::size_t points) {
  if (points == 0 || covariance.size() != points * points)
    throw Error(ErrorKind::InvalidArgument, "covariance must be points x points");
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = 0; j < points; ++j)
      if (covariance[i * points + j] != covariance[j * points + i])
        throw Error(ErrorKind::CovarianceNotPSD, "covariance is not symmetric");
  Eigen::MatrixXd c(points, points);
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = 0; j < points; ++j)
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = covariance[i * points + j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  const auto& ev = eig.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-9 * scale)
    throw Error(ErrorKind::CovarianceNotPSD,
                "smallest eigenvalue " + std::to_string(ev.minCoeff()) + " below -1e-9");
  RandomFieldModel m;
  m.kind_ = Kind::gaussian;
  m.points_ = points;
  m.cov_ = std::move(covariance);
  m.factor_.assign(points * points, 0.0);
  const auto& v = eig.eigenvectors();
  for (std::size_t k = 0; k < points; ++k) {
    const double root = std::sqrt(std::max(0.0, ev(static_cast<Eigen::Index>(k))));
    for (std::size_t t = 0; t < points; ++t)
      m.factor_[t * points + k] =
          v(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) * root;
  }
  return m;
}

RandomFieldModel RandomFieldModel::rademacher_profile(std::vector<double> amplitude) {
  if (amplitude.empty()) throw Error(ErrorKind::InvalidArgument, "empty amplitude profile");
  RandomFieldModel m;
  m.kind_ = Kind::rademacher_profile;
  m.points_ = amplitude.size();
  m.amp_ = std::move(amplitude);
  return m;
}

RandomFieldModel RandomFieldModel::trig_bounded(std::vector<double> amplitude,
                                                std::vector<double> phase) {
  if (amplitude.empty() || amplitude.size() != phase.size())
    throw Error(ErrorKind::InvalidArgument, "amplitude and phase must match and be nonempty");
  RandomFieldModel m;
  m.kind_ = Kind::trig_bounded;
  m.points_ = amplitude.size();
  m.amp_ = std::move(amplitude);
  m.phase_ = std::move(phase);
  return m;
}

RandomFieldModel RandomFieldModel::student_t_profile(std::vector<double> amplitude, double dof) {
  if (amplitude.empty() || !(dof > 1.0))
    throw Error(ErrorKind::InvalidArgument, "student-t profile needs dof > 1 (centred)");
  RandomFieldModel m;
  m.kind_ = Kind::student_t_profile;
  m.points_ = amplitude.size();
  m.amp_ = std::move(amplitude);
  m.dof_ = dof;
  return m;
}

std::string RandomFieldModel::kind_name() const {
  switch (kind_) {
    case Kind::gaussian: return "gaussian";
    case Kind::rademacher_profile: return "rademacher";
    case Kind::trig_bounded: return "trig";
    case Kind::student_t_profile: return "student-t";
  }
  return "unknown";
}

ScalarLaw RandomFieldModel::point_law(std::size_t t) const {
  switch (kind_) {
    case Kind::gaussian: return ScalarLaw::gaussian(std::sqrt(std::max(0.0, cov_[t * points_ + t])));
    case Kind::rademacher_profile: return ScalarLaw::rademacher(std::abs(amp_[t]));
    case Kind::trig_bounded: return ScalarLaw::cosine(std::abs(amp_[t]));
    case Kind::student_t_profile: return ScalarLaw::student_t(std::abs(amp_[t]), dof_);
  }
  return ScalarLaw::zero();
}

ScalarLaw RandomFieldModel::increment_law(std::size_t t, std::size_t s) const {
  if (t == s) return ScalarLaw::zero();
  switch (kind_) {
    case Kind::gaussian: {
      const double v = cov_[t * points_ + t] + cov_[s * points_ + s] - 2.0 * cov_[t * points_ + s];
      return ScalarLaw::gaussian(std::sqrt(std::max(0.0, v)));
    }
    case Kind::rademacher_profile: return ScalarLaw::rademacher(std::abs(amp_[t] - amp_[s]));
    case Kind::trig_bounded: {
      const double re = amp_[t] * std::cos(phase_[t]) - amp_[s] * std::cos(phase_[s]);
      const double im = amp_[t] * std::sin(phase_[t]) - amp_[s] * std::sin(phase_[s]);
      return ScalarLaw::cosine(std::hypot(re, im));
    }
    case Kind::student_t_profile: return ScalarLaw::student_t(std::abs(amp_[t] - amp_[s]), dof_);
  }
  return ScalarLaw::zero();
}

double RandomFieldModel::variance(std::size_t t) const { return point_law(t).variance(); }

std::optional<double> RandomFieldModel::bound() const {
  if (kind_ == Kind::gaussian) {
    if (std::all_of(cov_.begin(), cov_.end(), [](double c) { return c == 0.0; })) return 0.0;
    return std::nullopt;
  }
  if (kind_ == Kind::student_t_profile) return std::nullopt;
  double b = 0.0;
  for (double a : amp_) b = std::max(b, std::abs(a));
  return b;
}

void RandomFieldModel::sample_path(std::uint64_t seed, std::uint64_t index,
                                   std::span<double> out) const {
  StreamRng rng(seed, index);
  switch (kind_) {
    case Kind::gaussian: {
      thread_local std::vector<double> z;
      z.resize(points_);
      std::normal_distribution<double> normal;
      for (auto& v : z) v = normal(rng);
      for (std::size_t t = 0; t < points_; ++t) {
        const double* row = factor_.data() + t * points_;
        double s = 0.0;
        for (std::size_t k = 0; k < points_; ++k) s += row[k] * z[k];
        out[t] = s;
      }
      break;
    }
    case Kind::rademacher_profile: {
      const double sign = (rng() >> 63) ? 1.0 : -1.0;
      for (std::size_t t = 0; t < points_; ++t) out[t] = sign * amp_[t];
      break;
    }
    case Kind::trig_bounded: {
      const double u = 2.0 * std::numbers::pi * rng.uniform();
      for (std::size_t t = 0; t < points_; ++t) out[t] = amp_[t] * std::cos(u + phase_[t]);
      break;
    }
    case Kind::student_t_profile: {
      std::student_t_distribution<double> student(dof_);
      const double x = student(rng);
      for (std::size_t t = 0; t < points_; ++t) out[t] = amp_[t] * x;
      break;
    }
  }
}

RandomFieldModel RandomFieldModel::scaled(double c) const {
  RandomFieldModel m = *this;
  for (auto& v : m.cov_) v *= c * c;
  for (auto& v : m.factor_) v *= c;
  for (auto& v : m.amp_) v *= c;
  return m;
}

std::vector<double> brownian_covariance(const MetricSpace& sm) {
  const auto& coords = sm.coords();
  if (coords.size() != sm.size())
    throw Error(ErrorKind::InvalidArgument, "Brownian covariance needs point coordinates");
  const std::size_t n = sm.size();
  std::vector<double> cov(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cov[i * n + j] = std::min(coords[i][0], coords[j][0]);
  return cov;
}

std::vector<double> identity_covariance(std::size_t points) {
  std::vector<double> cov(points * points, 0.0);
  for (std::size_t i = 0; i < points; ++i) cov[i * points + i] = 1.0;
  return cov;
}

// ---------------------------------------------------------------------------
// Ensembles

Ensemble sample_ensemble(const RandomFieldModel& model, std::size_t count, std::uint64_t seed,
                         Exec exec) {
  if (count == 0) throw Error(ErrorKind::InvalidArgument, "ensemble needs at least one path");
  Ensemble e{model.points(), count, seed, std::vector<double>(count * model.points())};
  std::vector<double> dummy(count);
  detail::fill_items(dummy, exec, [&](std::size_t i) {
    model.sample_path(seed, i, std::span<double>(e.paths.data() + i * e.points, e.points));
    return 0.0;
  });
  return e;
}

void save_ensemble_csv(const Ensemble& e, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.precision(17);
  out << "# seed=" << e.seed << " rule: " << Ensemble::stream_rule << '\n';
  for (std::size_t i = 0; i < e.count; ++i) {
    const auto p = e.path(i);
    for (std::size_t t = 0; t < p.size(); ++t) out << (t ? "," : "") << p[t];
    out << '\n';
  }
}

std::vector<double> normed_sum(const Ensemble& e, std::size_t n) {
  if (n == 0 || n > e.count)
    throw Error(ErrorKind::NotEnoughPaths,
                "need " + std::to_string(n) + " paths, ensemble has " + std::to_string(e.count));
  std::vector<double> s(e.points, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = e.path(i);
    for (std::size_t t = 0; t < e.points; ++t) s[t] += p[t];
  }
  for (auto& v : s) v /= static_cast<double>(n);
  return s;
}

std::vector<double> zeta_n(const Ensemble& e, std::size_t n) {
  auto s = normed_sum(e, n);
  const double root = std::sqrt(static_cast<double>(n));
  for (auto& v : s) v *= root;
  return s;
}

std::uint64_t replication_stream(std::size_t rep, std::size_t block, std::size_t copy) {
  return static_cast<std::uint64_t>(rep) * block + copy;
}

namespace {

// Streams the copies of one replication and calls visit(k, S) each time the
// running count reaches sorted_n[k].
template <class Visit>
void replicate(const RandomFieldModel& model, std::uint64_t seed, std::size_t rep,
               std::span<const std::size_t> sorted_n, Visit&& visit) {
  const std::size_t p = model.points();
  const std::size_t block = sorted_n.back();
  thread_local std::vector<double> sum, path, s;
  sum.assign(p, 0.0);
  path.resize(p);
  s.resize(p);
  std::size_t k = 0;
  for (std::size_t c = 0; c < block; ++c) {
    model.sample_path(seed, replication_stream(rep, block, c), path);
    for (std::size_t t = 0; t < p; ++t) sum[t] += path[t];
    while (k < sorted_n.size() && sorted_n[k] == c + 1) {
      const double inv = static_cast<double>(c + 1);
      for (std::size_t t = 0; t < p; ++t) s[t] = sum[t] / inv;
      visit(k, std::span<const double>(s));
      ++k;
    }
  }
}

std::vector<std::size_t> sorted_unique(std::span<const std::size_t> ns) {
  if (ns.empty()) throw Error(ErrorKind::InvalidArgument, "n grid is empty");
  std::vector<std::size_t> v(ns.begin(), ns.end());
  if (std::find(v.begin(), v.end(), std::size_t{0}) != v.end())
    throw Error(ErrorKind::InvalidArgument, "n grid entries must be positive");
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t index_of(const std::vector<std::size_t>& sorted, std::size_t n) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), n) - sorted.begin());
}

double binomial_se(double p, std::uint64_t reps) {
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(reps));
}

bool exceeds(double stat, double level) { return stat > level + 1e-12 * std::abs(level); }

}  // namespace

// ---------------------------------------------------------------------------
// Cramér-type tail condition

CramerReport cramer_check(const RandomFieldModel& model, std::span<const double> mu_grid,
                          std::span<const double> x_grid, std::size_t mc_count, std::uint64_t seed,
                          Exec exec) {
  if (mu_grid.empty() || x_grid.empty())
    throw Error(ErrorKind::InvalidArgument, "cramer_check needs nonempty grids");
  CramerReport rep{false, true, {}, {}};
  if (const auto b = model.bound()) {
    rep.analytic = true;
    for (double mu : mu_grid) rep.rows.push_back({mu, true, *b});
    return rep;
  }
  if (mc_count == 0) throw Error(ErrorKind::InvalidArgument, "mc_count must be positive");
  std::vector<double> xs(x_grid.begin(), x_grid.end());
  std::sort(xs.begin(), xs.end());
  const std::size_t p = model.points(), nx = xs.size();
  const auto counts = detail::count_items(mc_count, p * nx, exec,
                                          [&](std::size_t i, std::span<std::uint64_t> c) {
    thread_local std::vector<double> path;
    path.resize(p);
    model.sample_path(seed, i, path);
    for (std::size_t t = 0; t < p; ++t)
      for (std::size_t j = 0; j < nx; ++j)
        if (std::abs(path[t]) > xs[j]) ++c[t * nx + j];
  });
  rep.sup_tail.assign(nx, 0.0);
  for (std::size_t t = 0; t < p; ++t)
    for (std::size_t j = 0; j < nx; ++j) {
      const double ph = static_cast<double>(counts[t * nx + j]) / static_cast<double>(mc_count);
      rep.sup_tail[j] = std::max(rep.sup_tail[j], ph + 2.0 * binomial_se(ph, mc_count));
    }
  for (double mu : mu_grid) {
    std::optional<double> x0;
    for (std::size_t j = nx; j-- > 0;) {
      if (rep.sup_tail[j] > std::exp(-mu * xs[j])) break;
      x0 = xs[j];
    }
    rep.rows.push_back({mu, x0.has_value(), x0});
    rep.pass = rep.pass && x0.has_value();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hoelder-ratio tail table

std::vector<TailCell> mc_tail_table(const RandomFieldModel& model, const MetricSpace& rho,
                                    std::span<const double> u_grid,
                                    std::span<const std::size_t> n_grid, std::size_t reps,
                                    std::uint64_t seed, Exec exec) {
  if (rho.size() != model.points())
    throw Error(ErrorKind::InvalidArgument, "rho does not match the model's mesh");
  if (u_grid.empty()) throw Error(ErrorKind::InvalidArgument, "u grid is empty");
  if (reps < 100) throw Error(ErrorKind::InvalidArgument, "mc_tail_table needs reps >= 100");
  const auto ns = sorted_unique(n_grid);
  const std::size_t p = model.points(), nu = u_grid.size();
  std::vector<std::pair<std::size_t, std::size_t>> live, dead;
  for (std::size_t t = 0; t < p; ++t)
    for (std::size_t s = t + 1; s < p; ++s) (rho(t, s) > 0.0 ? live : dead).emplace_back(t, s);

  const auto counts = detail::count_items(reps, ns.size() * nu, exec,
                                          [&](std::size_t r, std::span<std::uint64_t> c) {
    replicate(model, seed, r, ns, [&](std::size_t k, std::span<const double> sn) {
      for (const auto& [t, s] : dead) {
        const double diff = std::abs(sn[t] - sn[s]);
        if (diff > 1e-12 * (1.0 + std::max(std::abs(sn[t]), std::abs(sn[s]))))
          throw Error(ErrorKind::ZeroRho, "rho(" + std::to_string(t) + "," + std::to_string(s) +
                                              ") = 0 but the increment is nonzero");
      }
      double ratio = 0.0;
      for (const auto& [t, s] : live) ratio = std::max(ratio, std::abs(sn[t] - sn[s]) / rho(t, s));
      for (std::size_t j = 0; j < nu; ++j)
        if (exceeds(ratio, u_grid[j])) ++c[k * nu + j];
    });
  });

  std::vector<TailCell> cells;
  for (std::size_t j = 0; j < nu; ++j)
    for (std::size_t n : n_grid) {
      const std::uint64_t e = counts[index_of(ns, n) * nu + j];
      const double ph = static_cast<double>(e) / static_cast<double>(reps);
      cells.push_back({u_grid[j], n, e, reps, ph, binomial_se(ph, reps)});
    }
  return cells;
}

// ---------------------------------------------------------------------------
// Exit probabilities and empirical rates

RateTable etc_rate_estimate(const RandomFieldModel& model, const ExitSpec& spec,
                            std::span<const std::size_t> n_grid, std::size_t reps,
                            std::uint64_t seed, Exec exec) {
  if (spec.radii.empty()) throw Error(ErrorKind::InvalidArgument, "exit spec has no radii");
  if (reps == 0) throw Error(ErrorKind::InvalidArgument, "reps must be positive");
  if (spec.kind == ExitSpec::Kind::holder_ball &&
      (!spec.modulus || spec.modulus->omega.size() != model.points()))
    throw Error(ErrorKind::InvalidArgument, "Hoelder ball needs a modulus on the model's mesh");
  const auto ns = sorted_unique(n_grid);
  const std::size_t nr = spec.radii.size();

  const auto counts = detail::count_items(reps, ns.size() * nr, exec,
                                          [&](std::size_t r, std::span<std::uint64_t> c) {
    replicate(model, seed, r, ns, [&](std::size_t k, std::span<const double> sn) {
      double stat = 0.0;
      bool infinite = false;
      if (spec.kind == ExitSpec::Kind::sup_ball) {
        for (double v : sn) stat = std::max(stat, std::abs(v));
      } else {
        const auto h = holder_norm(sn, *spec.modulus);
        stat = h.value;
        infinite = h.infinite;
      }
      for (std::size_t j = 0; j < nr; ++j)
        if (infinite || exceeds(stat, spec.radii[j])) ++c[k * nr + j];
    });
  });

  RateTable table{{}, true, std::vector<bool>(nr, true)};
  for (std::size_t n : ns)
    for (std::size_t j = 0; j < nr; ++j) {
      const std::uint64_t e = counts[index_of(ns, n) * nr + j];
      const double ph = static_cast<double>(e) / static_cast<double>(reps);
      const double dn = static_cast<double>(n);
      const bool censored = e == 0;
      const double rate = censored ? std::log(static_cast<double>(reps)) / dn : -std::log(ph) / dn;
      table.cells.push_back({n, spec.radii[j], e, reps, ph, binomial_se(ph, reps), rate, censored});
      table.all_censored = table.all_censored && censored;
    }
  for (std::size_t j = 0; j < nr; ++j) {
    std::optional<double> prev;
    bool up = true, down = true;
    for (const auto& cell : table.cells) {
      if (cell.radius != spec.radii[j] || cell.censored) continue;
      if (prev) {
        up = up && cell.rate >= *prev;
        down = down && cell.rate <= *prev;
      }
      prev = cell.rate;
    }
    table.monotone_trend[j] = up || down;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Exponential moments

std::vector<double> statistic_sample(const RandomFieldModel& model, const Statistic& stat,
                                     std::size_t reps, std::uint64_t seed, Exec exec) {
  if (stat.n == 0) throw Error(ErrorKind::InvalidArgument, "statistic needs n >= 1");
  if (stat.kind == Statistic::Kind::holder_norm &&
      (!stat.modulus || stat.modulus->omega.size() != model.points()))
    throw Error(ErrorKind::InvalidArgument, "Hoelder statistic needs a modulus on the mesh");
  const std::size_t ns[] = {stat.n};
  const double root = std::sqrt(static_cast<double>(stat.n));
  std::vector<double> out(reps);
  detail::fill_items(out, exec, [&](std::size_t r) {
    double value = 0.0;
    replicate(model, seed, r, ns, [&](std::size_t, std::span<const double> sn) {
      thread_local std::vector<double> z;
      z.assign(sn.begin(), sn.end());
      for (auto& v : z) v *= root;
      if (stat.kind == Statistic::Kind::sup_norm) {
        for (double v : z) value = std::max(value, std::abs(v));
      } else {
        const auto h = holder_norm(z, *stat.modulus);
        value = h.infinite ? std::numeric_limits<double>::infinity() : h.value;
      }
    });
    return value;
  });
  return out;
}

namespace {

struct ExpMean {
  double log_mean;
  double mean;
  double se;
};

ExpMean exp_mean(std::span<const double> s, double lambda) {
  if (lambda == 0.0) return {0.0, 1.0, 0.0};
  double top = -std::numeric_limits<double>::infinity();
  for (double v : s) top = std::max(top, lambda * v);
  if (!std::isfinite(top)) return {top, top, top};
  double m = 0.0, m2 = 0.0;
  for (double v : s) {
    const double w = std::exp(lambda * v - top);
    m += w;
    m2 += w * w;
  }
  const auto n = static_cast<double>(s.size());
  m /= n;
  m2 /= n;
  const double var = std::max(0.0, m2 - m * m) * n / std::max(1.0, n - 1.0);
  const double log_mean = top + std::log(m);
  return {log_mean, std::exp(log_mean), std::exp(top) * std::sqrt(var / n)};
}

}  // namespace

std::vector<MomentRow> exp_moment_check(const RandomFieldModel& model, const Statistic& stat,
                                        std::span<const double> lambda_grid, std::size_t reps,
                                        std::uint64_t seed, Exec exec) {
  if (reps == 0) throw Error(ErrorKind::InvalidArgument, "reps must be positive");
  const auto values = statistic_sample(model, stat, 2 * reps, seed, exec);
  const std::span<const double> half(values.data(), reps);
  std::optional<double> bound;
  if (stat.kind == Statistic::Kind::sup_norm) bound = model.bound();
  std::vector<MomentRow> rows;
  for (double lambda : lambda_grid) {
    const auto a = exp_mean(half, lambda);
    const auto b = exp_mean(values, lambda);
    const bool overflow = !(a.log_mean < 700.0) || !(b.log_mean < 700.0);
    MomentRow row{lambda, a.mean, a.se, b.mean, false, overflow, std::nullopt};
    row.stable = !overflow && std::abs(b.mean - a.mean) < 0.2 * a.mean;
    if (bound) row.ceiling = std::exp(lambda * *bound * std::sqrt(static_cast<double>(stat.n)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace tightlab
