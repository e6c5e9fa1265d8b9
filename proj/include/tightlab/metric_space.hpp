#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tightlab {

/// A finite point cloud with a semi-distance matrix. Off-diagonal zeros are
/// allowed; the triangle inequality is checked up to `tol`.
class MetricSpace {
 public:
  MetricSpace(std::vector<std::string> labels, std::vector<double> dist, double tol = 1e-9,
              std::vector<std::vector<double>> coords = {});

  std::size_t size() const noexcept { return labels_.size(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return dist_[i * size() + j]; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {dist_.data() + i * size(), size()};
  }
  std::span<const double> matrix() const noexcept { return dist_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::vector<double>>& coords() const noexcept { return coords_; }
  double tol() const noexcept { return tol_; }

  /// Same labels and coordinates, new matrix (validated).
  MetricSpace with_distances(std::vector<double> dist) const;
  /// Relabel/reorder: point k of the result is point perm[k] of this space.
  MetricSpace permuted(std::span<const std::size_t> perm) const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> dist_;
  double tol_;
  std::vector<std::vector<double>> coords_;
};

/// Throws InvalidMetric naming the first broken invariant.
void validate_metric(std::span<const double> dist, std::size_t n, double tol);

// Built-in families. Point counts include both endpoints where applicable.
MetricSpace interval_grid(std::size_t points);              // {k/(points-1)}, |t-s|
MetricSpace brownian_grid(std::size_t points);              // interval grid, sqrt|t-s|
MetricSpace torus_grid(std::size_t points);                 // {k/points} on the unit circle
MetricSpace product_grid(std::size_t points_per_axis, std::size_t dims);  // Euclidean
MetricSpace two_point_space(double d);

MetricSpace load_metric_csv(const std::filesystem::path& path, double tol = 1e-9);
void save_metric_csv(const MetricSpace& sm, const std::filesystem::path& path);

struct Ball {
  std::size_t center;
  double radius;
  std::vector<std::size_t> members;
};

double diameter(const MetricSpace& sm);
Ball ball(const MetricSpace& sm, std::size_t center, double radius);

/// Sorted distinct positive off-diagonal distances.
std::vector<double> distinct_distances(const MetricSpace& sm);

enum class CoverMode { exact, greedy, automatic };

struct CoverOptions {
  CoverMode mode = CoverMode::exact;
  std::size_t exact_cap = 20;
};

/// Minimal number of closed eps-balls centred at cloud points covering the
/// cloud. Greedy picks the largest uncovered gain, lowest index on ties.
/// Automatic runs exact up to the cap and greedy beyond it.
std::size_t covering_number(const MetricSpace& sm, double eps, CoverOptions opt = {});

/// ln covering_number.
double metric_entropy(const MetricSpace& sm, double eps, CoverOptions opt = {});

}  // namespace tightlab
