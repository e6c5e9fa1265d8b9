#include "tightlab/majorizing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "parallel.hpp"
#include "tightlab/error.hpp"

namespace tightlab {

PointMeasure::PointMeasure(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw Error(ErrorKind::InvalidArgument, "measure has no points");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorKind::InvalidArgument, "measure weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorKind::InvalidArgument, "measure weights sum to " + std::to_string(total));
}

PointMeasure PointMeasure::uniform(std::size_t n) {
  return PointMeasure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

PointMeasure PointMeasure::permuted(std::span<const std::size_t> perm) const {
  std::vector<double> w(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) w[k] = weights_[perm[k]];
  return PointMeasure(std::move(w));
}

PointMeasure load_measure_csv(const std::filesystem::path& path, const MetricSpace& sm) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::map<std::string, double> by_label;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorKind::IoError, "bad measure row: " + line);
    std::string label = line.substr(0, comma);
    label.erase(label.find_last_not_of(" \t") + 1);
    if (label == "label") continue;
    try {
      by_label[label] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::IoError, "bad weight in row: " + line);
    }
  }
  std::vector<double> w;
  for (const auto& l : sm.labels()) {
    const auto it = by_label.find(l);
    if (it == by_label.end()) throw Error(ErrorKind::IoError, "measure file lacks label " + l);
    w.push_back(it->second);
  }
  return PointMeasure(std::move(w));
}

double ball_mass(const PointMeasure& m, const MetricSpace& sm, std::size_t x, double r) {
  if (m.size() != sm.size()) throw Error(ErrorKind::InvalidArgument, "measure/space size mismatch");
  double mass = 0.0;
  for (std::size_t y = 0; y < sm.size(); ++y)
    if (sm(x, y) <= r) mass += m[y];
  return mass;
}

namespace {

// 6 * int_0^D Phi^-1[4V / m(B(r,x))^2] dr for one centre.
double half_w(const MetricSpace& sm, const PointMeasure& m, const OrliczGenerator& phi,
              std::size_t x, double D, double V) {
  std::vector<std::pair<double, double>> by_dist;  // (distance, weight)
  for (std::size_t y = 0; y < sm.size(); ++y) by_dist.emplace_back(sm(x, y), m[y]);
  std::sort(by_dist.begin(), by_dist.end());
  double acc = 0.0, left = 0.0, mass = 0.0;
  std::size_t k = 0;
  while (left < D) {
    while (k < by_dist.size() && by_dist[k].first <= left) mass += by_dist[k++].second;
    const double right = k < by_dist.size() ? std::min(by_dist[k].first, D) : D;
    if (mass <= 0.0)
      throw Error(ErrorKind::InfiniteW, "ball around point " + std::to_string(x) +
                                            " has zero mass on [" + std::to_string(left) + ", " +
                                            std::to_string(right) + ")");
    acc += (right - left) * phi.inverse(4.0 * V / (mass * mass));
    left = right;
  }
  return 6.0 * acc;
}

}  // namespace

double w_distance(const MetricSpace& sm, const PointMeasure& m, const OrliczGenerator& phi,
                  std::size_t x1, std::size_t x2, double V) {
  if (m.size() != sm.size()) throw Error(ErrorKind::InvalidArgument, "measure/space size mismatch");
  if (!(V > 0.0)) throw Error(ErrorKind::InvalidArgument, "V must be positive");
  const double D = sm(x1, x2);
  if (D == 0.0) return 0.0;
  // Fixed summation order keeps w exactly symmetric.
  const std::size_t a = std::min(x1, x2), b = std::max(x1, x2);
  return half_w(sm, m, phi, a, D, V) + half_w(sm, m, phi, b, D, V);
}

MetricSpace w_matrix(const MetricSpace& sm, const PointMeasure& m, const OrliczGenerator& phi,
                     double V, Exec exec) {
  const std::size_t n = sm.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = t + 1; s < n; ++s) pairs.emplace_back(t, s);
  std::vector<double> values(pairs.size());
  detail::fill_items(values, exec, [&](std::size_t k) {
    return w_distance(sm, m, phi, pairs[k].first, pairs[k].second, V);
  });
  std::vector<double> dist(n * n, 0.0);
  double top = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    dist[pairs[k].first * n + pairs[k].second] = dist[pairs[k].second * n + pairs[k].first] = values[k];
    top = std::max(top, values[k]);
  }
  return MetricSpace(sm.labels(), std::move(dist), std::max(sm.tol(), 1e-12 * top), sm.coords());
}

const char* to_string(MeasureClass c) {
  switch (c) {
    case MeasureClass::minorizing: return "minorizing";
    case MeasureClass::majorizing: return "majorizing";
    case MeasureClass::neither: return "neither";
  }
  return "unknown";
}

Classification classify_measure(const PointMeasure& m, const MetricSpace& sm,
                                const OrliczGenerator& phi, std::vector<double> v_grid) {
  const double D = diameter(sm);
  if (v_grid.empty()) {
    if (D > 0.0)
      v_grid = {D / 4.0, D / 2.0, D, 2.0 * D};
    else
      v_grid = {1.0};
  }
  Classification out{MeasureClass::majorizing, 0.0, {}, v_grid};
  bool minorizing = true;
  for (std::size_t t = 0; t < sm.size(); ++t)
    for (std::size_t s = t + 1; s < sm.size(); ++s) {
      bool finite = true;
      for (double V : v_grid) {
        try {
          w_distance(sm, m, phi, t, s, V);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::InfiniteW) throw;
          finite = false;
          break;
        }
      }
      if (!finite) {
        minorizing = false;
        out.infinite_pairs.emplace_back(t, s);
        continue;
      }
      if (D > 0.0) out.sup_w = std::max(out.sup_w, w_distance(sm, m, phi, t, s, D));
    }
  if (!minorizing) {
    out.cls = MeasureClass::neither;
    out.sup_w = std::numeric_limits<double>::infinity();
  }
  return out;
}

namespace {

BasePoint argmin_point(const std::vector<double>& norms) {
  BasePoint best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t t = 0; t < norms.size(); ++t)
    if (norms[t] < best.norm) best = {t, norms[t]};
  if (!std::isfinite(best.norm))
    throw Error(ErrorKind::AllInfinite, "every point has an infinite Orlicz norm");
  return best;
}

}  // namespace

BasePoint base_point_check(const RandomFieldModel& model, const OrliczGenerator& phi) {
  std::vector<double> norms;
  for (std::size_t t = 0; t < model.points(); ++t)
    norms.push_back(luxemburg_norm(model.point_law(t), phi));
  return argmin_point(norms);
}

BasePoint base_point_check(const Ensemble& e, const OrliczGenerator& phi) {
  std::vector<double> norms;
  for (std::size_t t = 0; t < e.points; ++t) {
    RandomSample col{{}, e.seed};
    for (std::size_t i = 0; i < e.count; ++i) col.values.push_back(e.path(i)[t]);
    norms.push_back(luxemburg_norm(col, phi));
  }
  return argmin_point(norms);
}

RandomSample theta_factorization(const Ensemble& e, const MetricSpace& w, Exec exec) {
  if (w.size() != e.points) throw Error(ErrorKind::InvalidArgument, "w-matrix/ensemble mismatch");
  RandomSample out{std::vector<double>(e.count), e.seed};
  detail::fill_items(out.values, exec, [&](std::size_t i) {
    const auto p = e.path(i);
    double theta = 0.0;
    for (std::size_t t = 0; t < e.points; ++t)
      for (std::size_t s = t + 1; s < e.points; ++s) {
        const double diff = std::abs(p[t] - p[s]);
        if (w(t, s) > 0.0)
          theta = std::max(theta, diff / w(t, s));
        else if (diff != 0.0)
          throw Error(ErrorKind::ZeroW, "w(" + w.labels()[t] + "," + w.labels()[s] +
                                            ") = 0 but path " + std::to_string(i) +
                                            " has a nonzero increment");
      }
    return theta;
  });
  return out;
}

}  // namespace tightlab
