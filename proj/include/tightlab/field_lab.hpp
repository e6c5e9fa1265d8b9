#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tightlab/exec.hpp"
#include "tightlab/holder.hpp"
#include "tightlab/metric_space.hpp"
#include "tightlab/orlicz.hpp"

namespace tightlab {

/// A centred random field on a finite mesh: law metadata plus a sampler.
class RandomFieldModel {
 public:
  enum class Kind { gaussian, rademacher_profile, trig_bounded, student_t_profile };

  /// Row-major covariance. Eigenvalues below -1e-9 (relative) raise CovarianceNotPSD.
  static RandomFieldModel gaussian(std::vector<double> covariance, std::size_t points);
  /// xi(t) = eps * a(t), eps a fair sign.
  static RandomFieldModel rademacher_profile(std::vector<double> amplitude);
  /// xi(t) = a(t) cos(U + phase(t)), U uniform.
  static RandomFieldModel trig_bounded(std::vector<double> amplitude, std::vector<double> phase);
  /// xi(t) = a(t) T with T Student-t; heavy tailed, no MGF.
  static RandomFieldModel student_t_profile(std::vector<double> amplitude, double dof);

  Kind kind() const noexcept { return kind_; }
  std::string kind_name() const;
  std::size_t points() const noexcept { return points_; }
  const std::vector<double>& covariance() const noexcept { return cov_; }
  const std::vector<double>& amplitude() const noexcept { return amp_; }
  const std::vector<double>& phase() const noexcept { return phase_; }
  double dof() const noexcept { return dof_; }

  ScalarLaw point_law(std::size_t t) const;
  /// Law of xi(t) - xi(s).
  ScalarLaw increment_law(std::size_t t, std::size_t s) const;
  double variance(std::size_t t) const;
  /// sup_t |xi(t)| bound for bounded kinds.
  std::optional<double> bound() const;

  /// The path of copy `index` under `seed`, written into out (size points()).
  void sample_path(std::uint64_t seed, std::uint64_t index, std::span<double> out) const;

  RandomFieldModel scaled(double c) const;

 private:
  RandomFieldModel() = default;
  Kind kind_ = Kind::gaussian;
  std::size_t points_ = 0;
  std::vector<double> cov_;
  std::vector<double> factor_;  // row-major L with L L^T = cov
  std::vector<double> amp_;
  std::vector<double> phase_;
  double dof_ = 0.0;
};

/// min(t, s) on the first coordinate of an interval-type mesh.
std::vector<double> brownian_covariance(const MetricSpace& sm);
/// Identity covariance: independent unit Gaussians.
std::vector<double> identity_covariance(std::size_t points);

/// Sampled copies, row i = copy i. Row i is stream i of the master seed.
struct Ensemble {
  std::size_t points = 0;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::vector<double> paths;

  std::span<const double> path(std::size_t i) const { return {paths.data() + i * points, points}; }
  static constexpr const char* stream_rule =
      "copy i uses StreamRng(seed, i): SplitMix64 keyed by mix64(mix64(seed) ^ (i*0xD1342543DE82EF95 + 0x632BE59BD9B4E019))";
};

Ensemble sample_ensemble(const RandomFieldModel& model, std::size_t count, std::uint64_t seed,
                         Exec exec = Exec::parallel);
void save_ensemble_csv(const Ensemble& e, const std::filesystem::path& path);

/// S_n = mean of the first n copies.
std::vector<double> normed_sum(const Ensemble& e, std::size_t n);
/// zeta_n = sqrt(n) S_n.
std::vector<double> zeta_n(const Ensemble& e, std::size_t n);

/// Replication r of a Monte Carlo table uses copies r*block .. r*block+block-1
/// with block = max(n_grid): every n, u and radius shares the same draws.
std::uint64_t replication_stream(std::size_t rep, std::size_t block, std::size_t copy);

struct CramerRow {
  double mu;
  bool pass;
  std::optional<double> x0;
};

struct CramerReport {
  bool analytic;  ///< bounded model, decided without sampling
  bool pass;
  std::vector<CramerRow> rows;
  std::vector<double> sup_tail;  ///< per x: max_t (p_hat + 2 se)
};

CramerReport cramer_check(const RandomFieldModel& model, std::span<const double> mu_grid,
                          std::span<const double> x_grid, std::size_t mc_count, std::uint64_t seed,
                          Exec exec = Exec::parallel);

struct TailCell {
  double u;
  std::size_t n;
  std::uint64_t exceed;
  std::uint64_t reps;
  double p;
  double se;
};

/// Per (u, n): fraction of replications with sup_{rho>0} |S_n(t)-S_n(s)|/rho(t,s) > u.
std::vector<TailCell> mc_tail_table(const RandomFieldModel& model, const MetricSpace& rho,
                                    std::span<const double> u_grid,
                                    std::span<const std::size_t> n_grid, std::size_t reps,
                                    std::uint64_t seed, Exec exec = Exec::parallel);

/// Exit region complement: sup-norm ball or Hoelder ball of each radius.
struct ExitSpec {
  enum class Kind { sup_ball, holder_ball };
  Kind kind = Kind::sup_ball;
  std::vector<double> radii;
  std::optional<HolderModulus> modulus;
};

struct RateCell {
  std::size_t n;
  double radius;
  std::uint64_t exits;
  std::uint64_t reps;
  double p;
  double se;
  double rate;    ///< -(1/n) log p, or the censored lower bound (1/n) log reps
  bool censored;  ///< no exits observed
};

struct RateTable {
  std::vector<RateCell> cells;
  bool all_censored;
  /// Per radius: uncensored rates monotone in n (either direction).
  std::vector<bool> monotone_trend;
};

RateTable etc_rate_estimate(const RandomFieldModel& model, const ExitSpec& spec,
                            std::span<const std::size_t> n_grid, std::size_t reps,
                            std::uint64_t seed, Exec exec = Exec::parallel);

/// Per-path statistic for exponential-moment checks.
struct Statistic {
  enum class Kind { sup_norm, holder_norm };
  Kind kind = Kind::sup_norm;
  std::size_t n = 1;  ///< statistic of zeta_n
  std::optional<HolderModulus> modulus;
};

struct MomentRow {
  double lambda;
  double estimate;       ///< mean exp(lambda * stat) over reps
  double se;
  double estimate_2x;    ///< same with 2 * reps (first reps are shared)
  bool stable;           ///< |estimate_2x - estimate| < 20% of estimate
  bool overflow;
  std::optional<double> ceiling;  ///< exp(lambda * bound) for bounded sup statistics
};

std::vector<MomentRow> exp_moment_check(const RandomFieldModel& model, const Statistic& stat,
                                        std::span<const double> lambda_grid, std::size_t reps,
                                        std::uint64_t seed, Exec exec = Exec::parallel);

/// Statistic values for replications 0..reps-1 (used by exp_moment_check).
std::vector<double> statistic_sample(const RandomFieldModel& model, const Statistic& stat,
                                     std::size_t reps, std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace tightlab
