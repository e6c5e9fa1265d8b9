#include "tightlab/metric_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "tightlab/error.hpp"

namespace tightlab {

void validate_metric(std::span<const double> dist, std::size_t n, double tol) {
  if (n < 2) throw Error(ErrorKind::InvalidMetric, "need at least 2 points");
  if (dist.size() != n * n) throw Error(ErrorKind::InvalidMetric, "matrix is not square");
  if (!(tol >= 0.0)) throw Error(ErrorKind::InvalidMetric, "negative tolerance");
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i * n + i] != 0.0)
      throw Error(ErrorKind::InvalidMetric, "nonzero diagonal at " + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dist[i * n + j];
      if (!std::isfinite(v) || v < 0.0)
        throw Error(ErrorKind::InvalidMetric, "entry (" + std::to_string(i) + "," +
                                                  std::to_string(j) + ") is negative or not finite");
      if (v != dist[j * n + i])
        throw Error(ErrorKind::InvalidMetric,
                    "asymmetric pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dij = dist[i * n + j];
      for (std::size_t k = 0; k < n; ++k)
        if (dist[i * n + k] > dij + dist[j * n + k] + tol)
          throw Error(ErrorKind::InvalidMetric,
                      "triangle inequality fails for (" + std::to_string(i) + "," +
                          std::to_string(j) + "," + std::to_string(k) + ")");
    }
}

MetricSpace::MetricSpace(std::vector<std::string> labels, std::vector<double> dist, double tol,
                         std::vector<std::vector<double>> coords)
    : labels_(std::move(labels)), dist_(std::move(dist)), tol_(tol), coords_(std::move(coords)) {
  validate_metric(dist_, labels_.size(), tol_);
  if (!coords_.empty() && coords_.size() != labels_.size())
    throw Error(ErrorKind::InvalidMetric, "coordinate count does not match point count");
}

MetricSpace MetricSpace::with_distances(std::vector<double> dist) const {
  return MetricSpace(labels_, std::move(dist), tol_, coords_);
}

MetricSpace MetricSpace::permuted(std::span<const std::size_t> perm) const {
  const std::size_t n = size();
  if (perm.size() != n) throw Error(ErrorKind::InvalidArgument, "permutation size mismatch");
  std::vector<std::string> labels(n);
  std::vector<double> dist(n * n);
  std::vector<std::vector<double>> coords;
  for (std::size_t a = 0; a < n; ++a) {
    labels[a] = labels_[perm[a]];
    for (std::size_t b = 0; b < n; ++b) dist[a * n + b] = (*this)(perm[a], perm[b]);
  }
  if (!coords_.empty())
    for (std::size_t a = 0; a < n; ++a) coords.push_back(coords_[perm[a]]);
  return MetricSpace(std::move(labels), std::move(dist), tol_, std::move(coords));
}

namespace {

std::string point_label(std::size_t i) { return "p" + std::to_string(i); }

MetricSpace line_family(std::size_t points, bool brownian) {
  if (points < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 points");
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;
  const double step = 1.0 / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    labels.push_back(point_label(i));
    coords.push_back({static_cast<double>(i) * step});
  }
  std::vector<double> dist(points * points);
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = 0; j < points; ++j) {
      // Integer gap keeps the matrix exactly symmetric and exact on the grid.
      const double gap = static_cast<double>(i > j ? i - j : j - i) * step;
      dist[i * points + j] = brownian ? std::sqrt(gap) : gap;
    }
  // Rounding of sqrt can break the triangle inequality by ~1 ulp.
  return MetricSpace(std::move(labels), std::move(dist), 1e-9, std::move(coords));
}

}  // namespace

MetricSpace interval_grid(std::size_t points) { return line_family(points, false); }
MetricSpace brownian_grid(std::size_t points) { return line_family(points, true); }

MetricSpace torus_grid(std::size_t points) {
  if (points < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least 2 points");
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;
  const double step = 1.0 / static_cast<double>(points);
  for (std::size_t i = 0; i < points; ++i) {
    labels.push_back(point_label(i));
    coords.push_back({static_cast<double>(i) * step});
  }
  std::vector<double> dist(points * points);
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = 0; j < points; ++j) {
      const std::size_t gap = i > j ? i - j : j - i;
      dist[i * points + j] = static_cast<double>(std::min(gap, points - gap)) * step;
    }
  return MetricSpace(std::move(labels), std::move(dist), 1e-9, std::move(coords));
}

MetricSpace product_grid(std::size_t points_per_axis, std::size_t dims) {
  if (points_per_axis < 2 || dims < 1)
    throw Error(ErrorKind::InvalidArgument, "product grid needs >= 2 points per axis");
  std::size_t total = 1;
  for (std::size_t d = 0; d < dims; ++d) total *= points_per_axis;
  const double step = 1.0 / static_cast<double>(points_per_axis - 1);
  std::vector<std::string> labels;
  std::vector<std::vector<double>> coords;
  for (std::size_t k = 0; k < total; ++k) {
    std::vector<double> c(dims);
    std::size_t rem = k;
    std::string label = "p";
    for (std::size_t d = 0; d < dims; ++d) {
      const std::size_t idx = rem % points_per_axis;
      rem /= points_per_axis;
      c[d] = static_cast<double>(idx) * step;
      label += (d ? "_" : "") + std::to_string(idx);
    }
    labels.push_back(label);
    coords.push_back(std::move(c));
  }
  std::vector<double> dist(total * total);
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j) {
      double s = 0.0;
      for (std::size_t d = 0; d < dims; ++d) {
        const double diff = coords[i][d] - coords[j][d];
        s += diff * diff;
      }
      dist[i * total + j] = dist[j * total + i] = std::sqrt(s);
    }
  return MetricSpace(std::move(labels), std::move(dist), 1e-9, std::move(coords));
}

MetricSpace two_point_space(double d) {
  return MetricSpace({"t1", "t2"}, {0.0, d, d, 0.0});
}

MetricSpace load_metric_csv(const std::filesystem::path& path, double tol) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    return cells;
  };
  if (!std::getline(in, line)) throw Error(ErrorKind::IoError, "empty matrix file");
  std::vector<std::string> labels = split(line);
  const std::size_t n = labels.size();
  std::vector<double> dist;
  dist.reserve(n * n);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (cells.size() != n)
      throw Error(ErrorKind::IoError, path.string() + ": row " + std::to_string(row + 2) +
                                          " has " + std::to_string(cells.size()) + " cells");
    for (const auto& c : cells) {
      try {
        dist.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw Error(ErrorKind::IoError, path.string() + ": bad number '" + c + "'");
      }
    }
    ++row;
  }
  if (row != n) throw Error(ErrorKind::IoError, path.string() + ": expected " +
                                                    std::to_string(n) + " rows");
  return MetricSpace(std::move(labels), std::move(dist), tol);
}

void save_metric_csv(const MetricSpace& sm, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.precision(17);
  const auto& labels = sm.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? "," : "") << labels[i];
  out << '\n';
  for (std::size_t i = 0; i < sm.size(); ++i) {
    for (std::size_t j = 0; j < sm.size(); ++j) out << (j ? "," : "") << sm(i, j);
    out << '\n';
  }
}

double diameter(const MetricSpace& sm) {
  const auto m = sm.matrix();
  return *std::max_element(m.begin(), m.end());
}

Ball ball(const MetricSpace& sm, std::size_t center, double radius) {
  if (center >= sm.size()) throw Error(ErrorKind::InvalidArgument, "ball center out of range");
  Ball b{center, radius, {}};
  for (std::size_t j = 0; j < sm.size(); ++j)
    if (sm(center, j) <= radius) b.members.push_back(j);
  return b;
}

std::vector<double> distinct_distances(const MetricSpace& sm) {
  std::vector<double> out;
  for (std::size_t i = 0; i < sm.size(); ++i)
    for (std::size_t j = i + 1; j < sm.size(); ++j)
      if (sm(i, j) > 0.0) out.push_back(sm(i, j));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

using Words = std::vector<std::uint64_t>;

std::vector<Words> ball_masks(const MetricSpace& sm, double eps) {
  const std::size_t n = sm.size();
  const std::size_t words = (n + 63) / 64;
  std::vector<Words> masks(n, Words(words, 0));
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t j = 0; j < n; ++j)
      if (sm(c, j) <= eps) masks[c][j / 64] |= std::uint64_t{1} << (j % 64);
  return masks;
}

std::size_t greedy_cover(const std::vector<Words>& masks, std::size_t n) {
  const std::size_t words = masks.front().size();
  Words uncovered(words, ~std::uint64_t{0});
  if (n % 64) uncovered.back() = (std::uint64_t{1} << (n % 64)) - 1;
  std::size_t remaining = n, count = 0;
  while (remaining > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t c = 0; c < masks.size(); ++c) {
      std::size_t gain = 0;
      for (std::size_t w = 0; w < words; ++w)
        gain += static_cast<std::size_t>(std::popcount(masks[c][w] & uncovered[w]));
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    for (std::size_t w = 0; w < words; ++w) uncovered[w] &= ~masks[best][w];
    remaining -= best_gain;
    ++count;
  }
  return count;
}

class ExactCover {
 public:
  ExactCover(std::vector<std::uint64_t> masks, std::uint64_t full, std::size_t upper)
      : masks_(std::move(masks)), full_(full), best_(upper) {}

  std::size_t solve() {
    search(0, 0);
    return best_;
  }

 private:
  void search(std::uint64_t covered, std::size_t depth) {
    if (covered == full_) {
      best_ = std::min(best_, depth);
      return;
    }
    const std::uint64_t open = full_ & ~covered;
    const auto rem = static_cast<std::size_t>(std::popcount(open));
    std::size_t max_gain = 0;
    for (auto m : masks_) max_gain = std::max<std::size_t>(max_gain, std::popcount(m & open));
    if (depth + (rem + max_gain - 1) / max_gain >= best_) return;

    // Branch on the open point with the fewest covering balls.
    std::size_t pivot = 0, fewest = masks_.size() + 1;
    for (std::uint64_t bits = open; bits; bits &= bits - 1) {
      const auto p = static_cast<std::size_t>(std::countr_zero(bits));
      std::size_t cnt = 0;
      for (auto m : masks_) cnt += (m >> p) & 1U;
      if (cnt < fewest) {
        fewest = cnt;
        pivot = p;
      }
    }
    std::vector<std::pair<int, std::size_t>> options;
    for (std::size_t c = 0; c < masks_.size(); ++c)
      if ((masks_[c] >> pivot) & 1U) options.emplace_back(-std::popcount(masks_[c] & open), c);
    std::sort(options.begin(), options.end());
    for (const auto& [neg_gain, c] : options) search(covered | masks_[c], depth + 1);
  }

  std::vector<std::uint64_t> masks_;
  std::uint64_t full_;
  std::size_t best_;
};

}  // namespace

std::size_t covering_number(const MetricSpace& sm, double eps, CoverOptions opt) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "covering radius must be positive");
  const std::size_t n = sm.size();
  CoverMode mode = opt.mode;
  if (mode == CoverMode::automatic)
    mode = (n <= opt.exact_cap && n <= 64) ? CoverMode::exact : CoverMode::greedy;
  if (mode == CoverMode::exact && (n > opt.exact_cap || n > 64))
    throw Error(ErrorKind::ExactTooLarge, std::to_string(n) + " points exceeds exact cap " +
                                              std::to_string(opt.exact_cap));
  if (eps >= diameter(sm)) return 1;

  const auto masks = ball_masks(sm, eps);
  const std::size_t greedy = greedy_cover(masks, n);
  if (mode == CoverMode::greedy) return greedy;

  std::vector<std::uint64_t> flat;
  flat.reserve(n);
  for (const auto& m : masks) flat.push_back(m.front());
  const std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  return ExactCover(std::move(flat), full, greedy).solve();
}

double metric_entropy(const MetricSpace& sm, double eps, CoverOptions opt) {
  return std::log(static_cast<double>(covering_number(sm, eps, opt)));
}

}  // namespace tightlab
