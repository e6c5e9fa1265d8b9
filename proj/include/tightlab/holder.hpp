#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "tightlab/metric_space.hpp"

namespace tightlab {

/// Modulus semi-distance omega and the base point t0 of the Hoelder norm.
struct HolderModulus {
  MetricSpace omega;
  std::size_t base_point = 0;
};

struct HolderNorm {
  double value;
  bool infinite;  ///< some pair has omega = 0 but different values
};

/// |f(t0)| + max over pairs with omega > 0 of |f(t) - f(s)| / omega(t, s).
HolderNorm holder_norm(std::span<const double> f, const HolderModulus& hm);

/// holder_norm(f) <= r; an infinite norm is never inside a ball.
bool ball_membership(std::span<const double> f, const HolderModulus& hm, double r);

enum class ModulusRoute { chaining, majorizing };

/// Wraps rho_J (chaining) or the w-matrix (majorizing) as a modulus. The
/// caller passes the majorizing base point from base_point_check.
HolderModulus modulus_from(ModulusRoute route, MetricSpace matrix,
                           std::optional<std::size_t> base_point = std::nullopt);

}  // namespace tightlab
