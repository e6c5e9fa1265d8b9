#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "tightlab/exec.hpp"
#include "tightlab/field_lab.hpp"
#include "tightlab/metric_space.hpp"
#include "tightlab/orlicz.hpp"

namespace tightlab {

/// Probability weights on the points of a MetricSpace.
class PointMeasure {
 public:
  explicit PointMeasure(std::vector<double> weights);
  static PointMeasure uniform(std::size_t n);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Same measure with point k taken from perm[k].
  PointMeasure permuted(std::span<const std::size_t> perm) const;

 private:
  std::vector<double> weights_;
};

/// Two-column CSV (label, weight), rows matched to the space's labels.
PointMeasure load_measure_csv(const std::filesystem::path& path, const MetricSpace& sm);

/// m(B(x, r)) with the closed ball {y : d(x, y) <= r}.
double ball_mass(const PointMeasure& m, const MetricSpace& sm, std::size_t x, double r);

/// 6 * int_0^{d(x1,x2)} { Phi^-1[4V / m(B(r,x1))^2] + Phi^-1[4V / m(B(r,x2))^2] } dr,
/// summed exactly over the pieces where the ball masses are constant.
/// Throws InfiniteW when a ball of zero mass spans a piece of positive length.
double w_distance(const MetricSpace& sm, const PointMeasure& m, const OrliczGenerator& phi,
                  std::size_t x1, std::size_t x2, double V);

/// All pairwise w values as a MetricSpace (the majorizing-route modulus).
MetricSpace w_matrix(const MetricSpace& sm, const PointMeasure& m, const OrliczGenerator& phi,
                     double V, Exec exec = Exec::parallel);

enum class MeasureClass { minorizing, majorizing, neither };
const char* to_string(MeasureClass c);

struct Classification {
  MeasureClass cls;
  double sup_w;  ///< max over pairs of w(x1, x2; D), infinite for "neither"
  std::vector<std::pair<std::size_t, std::size_t>> infinite_pairs;
  std::vector<double> v_grid;
};

/// Empty v_grid means {D/4, D/2, D, 2D} with D the diameter.
Classification classify_measure(const PointMeasure& m, const MetricSpace& sm,
                                const OrliczGenerator& phi, std::vector<double> v_grid = {});

struct BasePoint {
  std::size_t point;
  double norm;
};

/// argmin_t |||xi(t)|||_Phi, lowest index on ties. Throws AllInfinite.
BasePoint base_point_check(const RandomFieldModel& model, const OrliczGenerator& phi);
BasePoint base_point_check(const Ensemble& e, const OrliczGenerator& phi);

/// theta_hat per path: max over pairs with w > 0 of |xi(t1) - xi(t2)| / w(t1, t2).
RandomSample theta_factorization(const Ensemble& e, const MetricSpace& w, Exec exec = Exec::parallel);

}  // namespace tightlab
