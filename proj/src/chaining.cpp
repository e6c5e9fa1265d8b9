#include "tightlab/chaining.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"
#include "tightlab/error.hpp"

namespace tightlab {

namespace {

template <class PairNorm>
MetricSpace pairwise_matrix(const MetricSpace& mesh, Exec exec, PairNorm&& norm) {
  const std::size_t n = mesh.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = t + 1; s < n; ++s) pairs.emplace_back(t, s);
  std::vector<double> values(pairs.size());
  detail::fill_items(values, exec, [&](std::size_t k) {
    const auto [t, s] = pairs[k];
    try {
      return norm(t, s);
    } catch (const Error& e) {
      throw Error(e.kind(), "pair (" + mesh.labels()[t] + "," + mesh.labels()[s] + "): " + e.what());
    }
  });
  std::vector<double> dist(n * n, 0.0);
  double top = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [t, s] = pairs[k];
    dist[t * n + s] = dist[s * n + t] = values[k];
    top = std::max(top, values[k]);
  }
  // Norms come from bisection at relative tolerance ~1e-6.
  const double tol = std::max(mesh.tol(), 1e-5 * top);
  return MetricSpace(mesh.labels(), std::move(dist), tol, mesh.coords());
}

void check_mesh(std::size_t points, const MetricSpace& mesh) {
  if (points != mesh.size())
    throw Error(ErrorKind::InvalidArgument, "model and mesh have different point counts");
}

RandomSample increments(const Ensemble& e, std::size_t t, std::size_t s) {
  RandomSample out{{}, e.seed};
  out.values.reserve(e.count);
  for (std::size_t i = 0; i < e.count; ++i) {
    const auto p = e.path(i);
    out.values.push_back(p[t] - p[s]);
  }
  return out;
}

}  // namespace

MetricSpace natural_distance(const RandomFieldModel& model, const MetricSpace& mesh,
                             const LogMgfFunction& chi, const NormOptions& opt, Exec exec) {
  check_mesh(model.points(), mesh);
  return pairwise_matrix(mesh, exec, [&](std::size_t t, std::size_t s) {
    return bchi_norm(model.increment_law(t, s), chi, opt).value;
  });
}

MetricSpace natural_distance(const RandomFieldModel& model, const MetricSpace& mesh,
                             const OrliczGenerator& phi, Exec exec) {
  check_mesh(model.points(), mesh);
  return pairwise_matrix(mesh, exec, [&](std::size_t t, std::size_t s) {
    const double v = luxemburg_norm(model.increment_law(t, s), phi);
    if (!std::isfinite(v)) throw Error(ErrorKind::Infeasible, "Orlicz norm of increment is infinite");
    return v;
  });
}

MetricSpace natural_distance(const Ensemble& e, const MetricSpace& mesh, const LogMgfFunction& chi,
                             const NormOptions& opt, Exec exec) {
  check_mesh(e.points, mesh);
  return pairwise_matrix(mesh, exec, [&](std::size_t t, std::size_t s) {
    return bchi_norm(increments(e, t, s), chi, opt).value;
  });
}

MetricSpace natural_distance(const Ensemble& e, const MetricSpace& mesh, const OrliczGenerator& phi,
                             Exec exec) {
  check_mesh(e.points, mesh);
  return pairwise_matrix(mesh, exec, [&](std::size_t t, std::size_t s) {
    return luxemburg_norm(increments(e, t, s), phi);
  });
}

double sigma_of(const RandomFieldModel& model, const LogMgfFunction& chi, const NormOptions& opt) {
  double sigma = 0.0;
  for (std::size_t t = 0; t < model.points(); ++t)
    sigma = std::max(sigma, bchi_norm(model.point_law(t), chi, opt).value);
  return sigma;
}

// ---------------------------------------------------------------------------

EntropyStepIntegral::EntropyStepIntegral(const MetricSpace& sm, const YoungPair& young,
                                         CoverOptions cover)
    : jumps_(distinct_distances(sm)) {
  counts_.push_back(jumps_.empty() ? 1 : covering_number(sm, 0.5 * jumps_.front(), cover));
  for (double r : jumps_) counts_.push_back(covering_number(sm, r, cover));
  for (std::size_t c : counts_) levels_.push_back(young.inverse(static_cast<double>(c)));
  double acc = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < jumps_.size(); ++k) {
    acc += (jumps_[k] - prev) * levels_[k];
    cumulative_.push_back(acc);
    prev = jumps_[k];
  }
}

double EntropyStepIntegral::operator()(double r) const {
  if (r <= 0.0) return 0.0;
  const auto m = static_cast<std::size_t>(std::upper_bound(jumps_.begin(), jumps_.end(), r) -
                                          jumps_.begin());
  if (m == 0) return r * levels_[0];
  return cumulative_[m - 1] + (r - jumps_[m - 1]) * levels_[m];
}

double EntropyStepIntegral::between(double a, double b) const {
  if (b <= a) return 0.0;
  // Direct piece sum over [a, b], independent of the cumulative table.
  double acc = 0.0, left = a;
  std::size_t k = static_cast<std::size_t>(std::upper_bound(jumps_.begin(), jumps_.end(), a) -
                                           jumps_.begin());
  for (; k < jumps_.size() && jumps_[k] < b; ++k) {
    acc += (jumps_[k] - left) * levels_[k];
    left = jumps_[k];
  }
  return acc + (b - left) * levels_[k];
}

EntropyIntegral entropy_integral(const MetricSpace& sm, const YoungPair& young, double sigma,
                                 CoverOptions cover) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma must be nonnegative");
  const EntropyStepIntegral f(sm, young, cover);
  EntropyIntegral out{f(sigma), {}};
  for (double r : f.jump_radii())
    if (r < sigma) out.jump_radii.push_back(r);
  return out;
}

MetricSpace chaining_modulus(const MetricSpace& sm, const YoungPair& young, CoverOptions cover) {
  const EntropyStepIntegral f(sm, young, cover);
  const std::size_t n = sm.size();
  std::vector<double> rho(n * n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = t + 1; s < n; ++s) rho[t * n + s] = rho[s * n + t] = f(sm(t, s));
  return sm.with_distances(std::move(rho));
}

TailBound tail_bound(double u, std::size_t n, double C, const Conjugate& chi_star) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be positive");
  const auto r = chi_star(C * u * std::sqrt(static_cast<double>(n)));
  return {std::clamp(std::exp(-r.value), 0.0, 1.0), r.lower_bound};
}

Calibration calibrate_C(std::span<const TailCell> cells, const Conjugate& chi_star,
                        const CalibrationOptions& opt) {
  if (cells.empty()) throw Error(ErrorKind::InvalidArgument, "empty tail table");
  auto failing = [&](double C) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if (tail_bound(c.u, c.n, C, chi_star).value < c.p + opt.stderr_cushion * c.se) bad.push_back(i);
    }
    return bad;
  };
  if (failing(opt.c_max).empty()) return {opt.c_max, true, {}};
  if (auto bad = failing(opt.c_min); !bad.empty()) return {opt.c_min, false, std::move(bad)};
  double lo = opt.c_min, hi = opt.c_max;
  while (hi - lo > opt.rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    (failing(mid).empty() ? lo : hi) = mid;
  }
  return {lo, false, {}};
}

}  // namespace tightlab
