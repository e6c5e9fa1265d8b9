#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tightlab/exec.hpp"
#include "tightlab/field_lab.hpp"
#include "tightlab/metric_space.hpp"
#include "tightlab/orlicz.hpp"

namespace tightlab {

enum class NormKind { bchi, luxemburg };

/// Matrix of ||xi(t) - xi(s)||_B(chi), from the model's increment laws.
/// Pairs are independent; parallel and serial runs give the same matrix.
MetricSpace natural_distance(const RandomFieldModel& model, const MetricSpace& mesh,
                             const LogMgfFunction& chi, const NormOptions& opt = {},
                             Exec exec = Exec::parallel);
/// Matrix of Luxemburg norms |||xi(t) - xi(s)|||_Phi.
MetricSpace natural_distance(const RandomFieldModel& model, const MetricSpace& mesh,
                             const OrliczGenerator& phi, Exec exec = Exec::parallel);
/// Empirical variants over the increments of an ensemble.
MetricSpace natural_distance(const Ensemble& e, const MetricSpace& mesh, const LogMgfFunction& chi,
                             const NormOptions& opt = {}, Exec exec = Exec::parallel);
MetricSpace natural_distance(const Ensemble& e, const MetricSpace& mesh, const OrliczGenerator& phi,
                             Exec exec = Exec::parallel);

/// sigma = max_t ||xi(t)||_B(chi).
double sigma_of(const RandomFieldModel& model, const LogMgfFunction& chi, const NormOptions& opt = {});

/// r -> integral_0^r Y_inv(N(T, d, eps)) d eps, exact on the step structure
/// of eps -> N (closed balls: N is constant on [r_k, r_{k+1})).
class EntropyStepIntegral {
 public:
  EntropyStepIntegral(const MetricSpace& sm, const YoungPair& young, CoverOptions cover = {CoverMode::automatic});

  /// Integral over [0, r].
  double operator()(double r) const;
  /// Integral over [a, b].
  double between(double a, double b) const;

  const std::vector<double>& jump_radii() const noexcept { return jumps_; }
  /// covering_numbers()[k] is N on [jump_radii()[k-1], jump_radii()[k]), k=0 on (0, first jump).
  const std::vector<std::size_t>& covering_numbers() const noexcept { return counts_; }

 private:
  std::vector<double> jumps_;
  std::vector<std::size_t> counts_;
  std::vector<double> levels_;      // Y_inv(counts_[k])
  std::vector<double> cumulative_;  // integral over [0, jumps_[k]]
};

struct EntropyIntegral {
  double value;
  std::vector<double> jump_radii;  ///< jumps inside (0, sigma)
};

/// J = integral_0^sigma Y_inv(N(T, d, eps)) d eps.
EntropyIntegral entropy_integral(const MetricSpace& sm, const YoungPair& young, double sigma,
                                 CoverOptions cover = {CoverMode::automatic});

/// rho_J(t, s) = integral_0^{d(t,s)} Y_inv(N(T, d, eps)) d eps.
MetricSpace chaining_modulus(const MetricSpace& sm, const YoungPair& young,
                             CoverOptions cover = {CoverMode::automatic});

struct TailBound {
  double value;
  bool lower_flag;  ///< conjugate hit its grid edge: the bound is only an upper estimate
};

/// exp(-chi*(C u sqrt n)) clamped to [0, 1].
TailBound tail_bound(double u, std::size_t n, double C, const Conjugate& chi_star);

struct CalibrationOptions {
  double c_max = 100.0;
  double c_min = 1e-6;
  double rel_tol = 1e-9;
  double stderr_cushion = 2.0;
};

struct Calibration {
  double C;
  bool saturated;                     ///< every C up to c_max dominates
  std::vector<std::size_t> violations;  ///< cells not dominated even at c_min
};

/// Largest C with tail_bound(u, n, C) >= p + cushion * se on every cell.
Calibration calibrate_C(std::span<const TailCell> cells, const Conjugate& chi_star,
                        const CalibrationOptions& opt = {});

}  // namespace tightlab
