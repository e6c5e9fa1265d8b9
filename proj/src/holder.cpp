#include "tightlab/holder.hpp"

#include <algorithm>
#include <cmath>

#include "tightlab/error.hpp"

namespace tightlab {

HolderNorm holder_norm(std::span<const double> f, const HolderModulus& hm) {
  const std::size_t n = hm.omega.size();
  if (f.size() != n) throw Error(ErrorKind::InvalidArgument, "path length does not match modulus");
  if (hm.base_point >= n) throw Error(ErrorKind::InvalidArgument, "base point out of range");
  double ratio = 0.0;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t s = t + 1; s < n; ++s) {
      const double diff = std::abs(f[t] - f[s]);
      const double w = hm.omega(t, s);
      if (w > 0.0)
        ratio = std::max(ratio, diff / w);
      else if (diff != 0.0)
        return {std::abs(f[hm.base_point]), true};
    }
  return {std::abs(f[hm.base_point]) + ratio, false};
}

bool ball_membership(std::span<const double> f, const HolderModulus& hm, double r) {
  const auto norm = holder_norm(f, hm);
  return !norm.infinite && norm.value <= r;
}

HolderModulus modulus_from(ModulusRoute, MetricSpace matrix, std::optional<std::size_t> base_point) {
  const std::size_t t0 = base_point.value_or(0);
  if (t0 >= matrix.size()) throw Error(ErrorKind::InvalidArgument, "base point out of range");
  return {std::move(matrix), t0};
}

}  // namespace tightlab
