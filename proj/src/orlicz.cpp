#include "tightlab/orlicz.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>

#include "tightlab/error.hpp"

namespace tightlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_mean_exp(std::span<const double> xs, double lambda) {
  double top = -kInf;
  for (double x : xs) top = std::max(top, lambda * x);
  double s = 0.0;
  for (double x : xs) s += std::exp(lambda * x - top);
  return top + std::log(s / static_cast<double>(xs.size()));
}

struct Moments {
  double mean;
  double se;
};

Moments moments(std::span<const double> xs) {
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd / std::sqrt(n)};
}

void require_centered(std::span<const double> xs, double sigmas, const std::string& where) {
  const auto m = moments(xs);
  if (std::abs(m.mean) > sigmas * m.se)
    throw Error(ErrorKind::NonCentered, where + ": sample mean " + std::to_string(m.mean) +
                                            " exceeds " + std::to_string(sigmas) +
                                            " standard errors (" + std::to_string(m.se) + ")");
}

// Lagrange interpolation through nodes xs[0..k) at x.
double lagrange(const double* xs, const double* ys, std::size_t k, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double w = 1.0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) w *= (x - xs[j]) / (xs[i] - xs[j]);
    s += w * ys[i];
  }
  return s;
}

double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::vector<double> symmetric_grid(double half_width, std::size_t points) {
  if (points < 5 || points % 2 == 0 || !(half_width > 0.0))
    throw Error(ErrorKind::InvalidArgument, "symmetric grid needs an odd point count >= 5");
  const auto mid = static_cast<double>((points - 1) / 2);
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k) g[k] = (static_cast<double>(k) - mid) * half_width / mid;
  return g;
}

double log_cosh(double x) {
  x = std::abs(x);
  if (x < 1.0) {
    const double s = std::sinh(0.5 * x);
    return std::log1p(2.0 * s * s);
  }
  return x + std::log1p(std::exp(-2.0 * x)) - std::numbers::ln2;
}

double log_bessel_i0(double x) {
  x = std::abs(x);
  if (x < 1.0) {
    // I0(x) - 1 = sum_{k>=1} (x^2/4)^k / (k!)^2
    const double q = 0.25 * x * x;
    double term = 1.0, s = 0.0;
    for (int k = 1; k < 30; ++k) {
      term *= q / (static_cast<double>(k) * static_cast<double>(k));
      s += term;
      if (term < 1e-18 * s) break;
    }
    return std::log1p(s);
  }
  if (x < 500.0) return std::log(std::cyl_bessel_i(0.0, x));
  const double ix = 1.0 / x;
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) +
         std::log1p(ix / 8.0 + 9.0 * ix * ix / 128.0 + 225.0 * ix * ix * ix / 3072.0);
}

// ---------------------------------------------------------------------------
// ScalarLaw

double ScalarLaw::log_mgf(double lambda) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::gaussian: return 0.5 * lambda * lambda * scale_ * scale_;
    case Kind::rademacher: return log_cosh(lambda * scale_);
    case Kind::cosine: return log_bessel_i0(lambda * scale_);
    case Kind::student_t: return (lambda == 0.0 || scale_ == 0.0) ? 0.0 : kInf;
  }
  return kInf;
}

double ScalarLaw::variance() const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::gaussian:
    case Kind::rademacher: return scale_ * scale_;
    case Kind::cosine: return 0.5 * scale_ * scale_;
    case Kind::student_t: return dof_ > 2.0 ? scale_ * scale_ * dof_ / (dof_ - 2.0) : kInf;
  }
  return kInf;
}

std::optional<double> ScalarLaw::bound() const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::rademacher:
    case Kind::cosine: return std::abs(scale_);
    default: return std::nullopt;
  }
}

double ScalarLaw::orlicz_mean(const OrliczGenerator& phi, double tau) const {
  using boost::math::quadrature::gauss_kronrod;
  const double s = std::abs(scale_);
  if (kind_ == Kind::zero || s == 0.0) return 0.0;
  if (!(tau > 0.0)) return kInf;
  switch (kind_) {
    case Kind::rademacher: return phi(s / tau);
    case Kind::cosine: {
      auto f = [&](double u) { return phi(s * std::abs(std::cos(u)) / tau); };
      return gauss_kronrod<double, 61>::integrate(f, 0.0, std::numbers::pi, 15, 1e-12) /
             std::numbers::pi;
    }
    case Kind::gaussian:
    case Kind::student_t: {
      std::function<double(double)> log_pdf;
      double top;
      if (kind_ == Kind::gaussian) {
        const double c = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(s);
        log_pdf = [=](double x) { return c - 0.5 * (x / s) * (x / s); };
        top = 60.0 * s;
      } else {
        const double v = dof_;
        const double c = std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                         0.5 * std::log(v * std::numbers::pi) - std::log(s);
        log_pdf = [=](double x) { return c - 0.5 * (v + 1.0) * std::log1p((x / s) * (x / s) / v); };
        top = 1e4 * s;
      }
      auto log_integrand = [&](double x) { return phi.log_forward(x / tau) + log_pdf(x); };
      if (kind_ == Kind::student_t) {
        const double far = tau * phi.u_max();
        if (!(log_integrand(far) < log_integrand(0.5 * far))) return kInf;
      }
      // Divergent if the log-integrand is not decaying at the truncation point.
      const double g_top = log_integrand(top), g_half = log_integrand(0.5 * top);
      if (!(g_top < g_half) || g_top > -40.0) return kInf;
      auto f = [&](double x) { return 2.0 * std::exp(log_integrand(x)); };
      return gauss_kronrod<double, 61>::integrate(f, 0.0, top, 20, 1e-12);
    }
    default: return kInf;
  }
}

// ---------------------------------------------------------------------------
// LogMgfFunction

namespace {

void validate_grid(const std::vector<double>& grid) {
  if (grid.size() < 5) throw Error(ErrorKind::InvalidArgument, "lambda grid needs >= 5 nodes");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw Error(ErrorKind::InvalidArgument, "lambda grid must be strictly increasing");
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(grid[i] + grid[n - 1 - i]) > 1e-12 * std::max(1.0, std::abs(grid[i])))
      throw Error(ErrorKind::InvalidArgument, "lambda grid must be symmetric about 0");
}

void validate_values(const std::vector<double>& grid, const std::vector<double>& v) {
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(v[i]))
      throw Error(ErrorKind::InvalidArgument,
                  "function not finite at lambda=" + std::to_string(grid[i]));
    if (std::abs(v[i] - v[n - 1 - i]) > 1e-9 * (1.0 + std::abs(v[i])))
      throw Error(ErrorKind::InvalidArgument, "function is not even on the grid");
    if (grid[i] == 0.0 && std::abs(v[i]) > 1e-12)
      throw Error(ErrorKind::InvalidArgument, "function must vanish at 0");
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double left = (v[i] - v[i - 1]) / (grid[i] - grid[i - 1]);
    const double right = (v[i + 1] - v[i]) / (grid[i + 1] - grid[i]);
    if (right - left < -1e-9 * (1.0 + std::abs(left)))
      throw Error(ErrorKind::InvalidArgument,
                  "function not convex near lambda=" + std::to_string(grid[i]));
  }
}

}  // namespace

LogMgfFunction::LogMgfFunction(Kind kind, std::vector<double> grid, Evaluator eval,
                               std::string name)
    : kind_(kind), grid_(std::move(grid)), eval_(std::move(eval)), name_(std::move(name)) {
  validate_grid(grid_);
  values_.reserve(grid_.size());
  for (double l : grid_) values_.push_back(eval_(l));
  validate_values(grid_, values_);
}

LogMgfFunction LogMgfFunction::tabulated(std::vector<double> grid, std::vector<double> values) {
  if (grid.size() != values.size())
    throw Error(ErrorKind::InvalidArgument, "grid and values differ in length");
  validate_grid(grid);
  validate_values(grid, values);
  LogMgfFunction f(Kind::tabulated, std::move(grid), [](double) { return 0.0; }, "tabulated");
  f.values_ = std::move(values);
  f.eval_ = nullptr;
  return f;
}

LogMgfFunction LogMgfFunction::gaussian(double variance, std::vector<double> grid) {
  return {Kind::gaussian, std::move(grid),
          [variance](double l) { return 0.5 * variance * l * l; }, "gaussian"};
}

LogMgfFunction LogMgfFunction::rademacher(double amplitude, std::vector<double> grid) {
  return {Kind::rademacher, std::move(grid),
          [amplitude](double l) { return log_cosh(amplitude * l); }, "rademacher"};
}

LogMgfFunction LogMgfFunction::quadratic(double c, std::vector<double> grid) {
  return {Kind::custom, std::move(grid), [c](double l) { return c * l * l; }, "quadratic"};
}

Interpolated LogMgfFunction::interpolate(double lambda) const {
  const std::size_t n = grid_.size();
  if (lambda < grid_.front() - 1e-12 || lambda > grid_.back() + 1e-12)
    throw Error(ErrorKind::InvalidArgument,
                "lambda=" + std::to_string(lambda) + " outside the tabulated grid");
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), lambda);
  std::size_t k = it == grid_.begin() ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
  k = std::min(k, n - 2);
  std::size_t lo = k >= 1 ? k - 1 : 0;
  if (lo + 4 > n) lo = n - 4;
  const double cubic = lagrange(&grid_[lo], &values_[lo], 4, lambda);
  const std::size_t qlo = std::min(lo, n - 3);
  const double quad = lagrange(&grid_[qlo], &values_[qlo], 3, lambda);
  return {cubic, std::abs(cubic - quad)};
}

double LogMgfFunction::operator()(double lambda) const {
  if (eval_) return eval_(lambda);
  return interpolate(lambda).value;
}

LogMgfFunction phi_of(std::span<const ScalarLaw> laws, std::vector<double> grid) {
  if (laws.empty()) throw Error(ErrorKind::InvalidArgument, "phi_of needs at least one point");
  std::vector<ScalarLaw> copy(laws.begin(), laws.end());
  bool all_gauss = true, all_rad = true;
  for (const auto& l : copy) {
    all_gauss = all_gauss && (l.kind() == ScalarLaw::Kind::gaussian || l.kind() == ScalarLaw::Kind::zero);
    all_rad = all_rad && (l.kind() == ScalarLaw::Kind::rademacher || l.kind() == ScalarLaw::Kind::zero);
  }
  for (double l : grid)
    for (const auto& law : copy)
      if (!std::isfinite(law.log_mgf(l)))
        throw Error(ErrorKind::MgfDiverged,
                    "log-MGF infinite at lambda=" + std::to_string(l) + " (tail too heavy)");
  auto kind = all_gauss ? LogMgfFunction::Kind::gaussian
                        : (all_rad ? LogMgfFunction::Kind::rademacher : LogMgfFunction::Kind::custom);
  return {kind, std::move(grid),
          [laws = std::move(copy)](double l) {
            double best = 0.0;
            for (const auto& law : laws) best = std::max(best, law.log_mgf(l));
            return best;
          },
          "phi"};
}

LogMgfFunction phi_of_samples(std::span<const double> draws, std::size_t points,
                              std::vector<double> grid, PhiOptions opt) {
  if (points == 0 || draws.empty() || draws.size() % points != 0)
    throw Error(ErrorKind::InvalidArgument, "draw matrix shape does not match point count");
  const std::size_t count = draws.size() / points;
  auto columns = std::make_shared<std::vector<std::vector<double>>>(points);
  for (std::size_t t = 0; t < points; ++t) {
    auto& col = (*columns)[t];
    col.reserve(count);
    for (std::size_t r = 0; r < count; ++r) col.push_back(draws[r * points + t]);
    require_centered(col, opt.center_sigmas, "point " + std::to_string(t));
  }
  auto eval = [columns](double l) {
    double best = 0.0;
    for (const auto& col : *columns)
      best = std::max({best, log_mean_exp(col, l), log_mean_exp(col, -l)});
    return best;
  };
  for (double l : grid)
    if (eval(l) > opt.log_overflow)
      throw Error(ErrorKind::MgfDiverged,
                  "empirical MGF overflows at lambda=" + std::to_string(l) + "; narrow the grid");
  LogMgfFunction f(LogMgfFunction::Kind::empirical, std::move(grid), eval, "phi-empirical");
  f.set_sample_size(count);
  return f;
}

Envelope envelope_constants(const LogMgfFunction& phi) {
  double c1 = kInf, c2 = 0.0;
  bool any = false;
  const auto& g = phi.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double l = std::abs(g[i]);
    if (l == 0.0 || l > 1.0 + 1e-12) continue;
    any = true;
    const double r = phi.values()[i] / (l * l);
    c1 = std::min(c1, r);
    c2 = std::max(c2, r);
  }
  if (!any) throw Error(ErrorKind::InvalidArgument, "grid has no nodes in (0, 1]");
  if (c1 <= 1e-12) throw Error(ErrorKind::EnvelopeViolated, "phi(lambda)/lambda^2 vanishes near 0");
  return {c1, c2};
}

namespace {

double checked_eval(const LogMgfFunction& phi, double mu, double tol) {
  if (phi.has_evaluator()) return phi(mu);
  const auto r = phi.interpolate(mu);
  if (r.error_estimate > tol)
    throw Error(ErrorKind::GridTooCoarse, "interpolation error " + std::to_string(r.error_estimate) +
                                              " at lambda=" + std::to_string(mu));
  return r.value;
}

double curvature_limit(const LogMgfFunction& phi, double tol) {
  double mu = 1e-3;
  if (!phi.has_evaluator()) {
    const auto& g = phi.grid();
    mu = *std::upper_bound(g.begin(), g.end(), 0.0);
  }
  const double r1 = checked_eval(phi, mu, tol) / (mu * mu);
  if (2.0 * mu > phi.grid_max()) return r1;
  const double r2 = checked_eval(phi, 2.0 * mu, tol) / (4.0 * mu * mu);
  return std::max(0.0, r1 - (r2 - r1) / 3.0);
}

std::vector<std::size_t> chi_n_values(std::size_t cap) {
  std::vector<std::size_t> ns;
  const std::size_t dense = std::min<std::size_t>(cap, 1000);
  for (std::size_t n = 1; n <= dense; ++n) ns.push_back(n);
  if (cap > dense) {
    const double a = std::log(static_cast<double>(dense)), b = std::log(static_cast<double>(cap));
    for (int k = 1; k <= 400; ++k) {
      const auto n = static_cast<std::size_t>(std::llround(std::exp(a + (b - a) * k / 400.0)));
      if (n > ns.back()) ns.push_back(n);
    }
    if (ns.back() != cap) ns.push_back(cap);
  }
  return ns;
}

}  // namespace

ChiValue chi_of(const LogMgfFunction& phi, double lambda, ChiOptions opt) {
  lambda = std::abs(lambda);
  if (lambda == 0.0) return {0.0, 1};
  if (opt.n_cap < 1) throw Error(ErrorKind::InvalidArgument, "n_cap must be positive");
  ChiValue best{-kInf, 1};
  for (std::size_t n : chi_n_values(opt.n_cap)) {
    const double dn = static_cast<double>(n);
    const double v = dn * checked_eval(phi, lambda / std::sqrt(dn), opt.interp_tol);
    if (v > best.value) best = {v, n};
  }
  const double limit = curvature_limit(phi, opt.interp_tol) * lambda * lambda;
  if (limit > best.value) best = {limit, 0};
  return best;
}

LogMgfFunction chi_function(const LogMgfFunction& phi, ChiOptions opt, std::vector<double> grid) {
  if (grid.empty()) grid = phi.grid();
  // A table cannot be extrapolated: chi(l) needs phi(l) itself (n = 1).
  if (!phi.has_evaluator() && grid.back() > phi.grid_max() * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidArgument, "chi grid exceeds the tabulated phi grid");
  // Spacing is fixed by the inner range; the table then extends to 4x the chi
  // grid so norm bisections with tau > 1 stay on the table.
  const double inner = phi.has_evaluator() ? std::max(4.0 * phi.grid_max(), grid.back()) : phi.grid_max();
  const double h = inner / 2000.0;
  const std::size_t nodes =
      phi.has_evaluator() ? static_cast<std::size_t>(std::ceil(std::max(inner, 4.0 * grid.back()) / h)) + 1 : 2001;
  const double reach = h * static_cast<double>(nodes - 1);
  auto table = std::make_shared<std::vector<double>>(nodes);
  for (std::size_t k = 0; k < nodes; ++k)
    (*table)[k] = chi_of(phi, static_cast<double>(k) * h, opt).value;
  auto eval = [table, h, reach, phi, opt](double l) {
    l = std::abs(l);
    if (l > reach) return chi_of(phi, l, opt).value;
    const auto& t = *table;
    const auto last = static_cast<std::ptrdiff_t>(t.size()) - 1;
    auto k = static_cast<std::ptrdiff_t>(l / h);
    k = std::clamp<std::ptrdiff_t>(k, 0, last - 1);
    std::ptrdiff_t lo = std::clamp<std::ptrdiff_t>(k - 1, -1, last - 3);
    double xs[4], ys[4];
    for (int i = 0; i < 4; ++i) {
      const auto idx = lo + i;
      xs[i] = static_cast<double>(idx) * h;
      ys[i] = t[static_cast<std::size_t>(std::abs(idx))];  // even extension across 0
    }
    return lagrange(xs, ys, 4, l);
  };
  std::string name = "chi(" + phi.name() + ")";
  return {phi.kind() == LogMgfFunction::Kind::tabulated ? LogMgfFunction::Kind::custom : phi.kind(),
          std::move(grid), std::move(eval), std::move(name)};
}

// ---------------------------------------------------------------------------
// Conjugation

LegendreValue legendre(const LogMgfFunction& f, double x) {
  const double ax = std::abs(x);
  if (ax == 0.0) return {0.0, 0.0, false};
  const auto& g = f.grid();
  const auto& v = f.values();
  const std::size_t zero = static_cast<std::size_t>(
      std::lower_bound(g.begin(), g.end(), 0.0) - g.begin());
  std::size_t best = zero;
  double best_val = -kInf;
  for (std::size_t i = zero; i < g.size(); ++i) {
    const double obj = g[i] * ax - v[i];
    if (obj > best_val) {
      best_val = obj;
      best = i;
    }
  }
  if (best + 1 == g.size()) return {std::max(0.0, best_val), g[best], true};
  const double a = best > zero ? g[best - 1] : std::max(0.0, g[best]);
  const double b = g[best + 1];
  auto obj = [&](double l) { return l * ax - f(l); };
  const double arg = golden_max(obj, a, b);
  const double refined = obj(arg);
  if (refined > best_val) return {std::max(0.0, refined), arg, false};
  return {std::max(0.0, best_val), g[best], false};
}

Conjugate Conjugate::quadratic(double c) {
  if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgument, "quadratic conjugate needs c > 0");
  Conjugate cs;
  cs.closed_c_ = c;
  return cs;
}

LegendreValue Conjugate::operator()(double x) const {
  if (f_) return legendre(*f_, x);
  return {x * x / (4.0 * closed_c_), std::abs(x) / (2.0 * closed_c_), false};
}

YoungPair::YoungPair(Fn chi_star, double z_max, std::size_t check_points)
    : chi_star_(std::move(chi_star)), z_max_(z_max) {
  if (!(z_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "z_max must be positive");
  double prev = chi_star_(0.0);
  for (std::size_t i = 1; i <= check_points; ++i) {
    const double z = z_max * static_cast<double>(i) / static_cast<double>(check_points);
    const double cur = chi_star_(z);
    if (!(cur > prev))
      throw Error(ErrorKind::NotMonotone, "conjugate not strictly increasing near z=" +
                                              std::to_string(z));
    prev = cur;
  }
}

YoungPair YoungPair::from_conjugate(const Conjugate& cs, double z_max) {
  return YoungPair(
      [cs](double z) {
        const auto r = cs(z);
        if (r.lower_bound)
          throw Error(ErrorKind::SlopeOutOfRange,
                      "conjugate at z=" + std::to_string(z) + " hits the lambda-grid edge");
        return r.value;
      },
      z_max);
}

YoungPair YoungPair::gaussian() {
  YoungPair y;
  y.chi_star_ = [](double z) { return 0.5 * z * z; };
  y.closed_inverse_ = [](double u) { return std::sqrt(2.0 * std::log1p(u)); };
  y.z_max_ = kInf;
  return y;
}

double YoungPair::forward(double z) const { return std::expm1(chi_star_(z)); }

double YoungPair::inverse(double u) const {
  if (!(u >= 0.0)) throw Error(ErrorKind::InvalidArgument, "Y_inv needs u >= 0");
  if (closed_inverse_) return closed_inverse_(u);
  if (u == 0.0) return 0.0;
  if (forward(z_max_) < u)
    throw Error(ErrorKind::InvalidArgument,
                "Y_inv(" + std::to_string(u) + ") beyond the conjugate's range");
  double lo = 0.0, hi = z_max_;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (forward(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Norms

double bchi_norm_of(const std::function<double(double)>& log_mgf, const LogMgfFunction& chi,
                    const NormOptions& opt) {
  std::vector<double> lambdas;
  for (double l : opt.lambda_grid.empty() ? chi.grid() : opt.lambda_grid)
    if (l != 0.0) lambdas.push_back(l);
  std::vector<double> lm;
  lm.reserve(lambdas.size());
  for (double l : lambdas) {
    lm.push_back(log_mgf(l));
    if (!std::isfinite(lm.back()))
      throw Error(ErrorKind::Infeasible, "log-MGF infinite at lambda=" + std::to_string(l));
  }
  auto feasible = [&](double tau) {
    for (std::size_t i = 0; i < lambdas.size(); ++i)
      if (lm[i] > chi(lambdas[i] * tau) + 1e-10 * std::abs(lm[i])) return false;
    return true;
  };
  if (feasible(0.0)) return 0.0;
  double hi = 1.0;
  while (!feasible(hi)) {
    if (hi >= opt.tau_max)
      throw Error(ErrorKind::Infeasible,
                  "no tau <= " + std::to_string(opt.tau_max) + " satisfies the MGF bound");
    hi = std::min(2.0 * hi, opt.tau_max);
  }
  double lo = 0.0;
  for (int i = 0; i < 1100 && feasible(0.5 * hi); ++i) hi *= 0.5;
  lo = 0.5 * hi;
  while (hi - lo > opt.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

NormResult bchi_norm(const ScalarLaw& law, const LogMgfFunction& chi, const NormOptions& opt) {
  if (!opt.lambda_grid.empty())
    return {bchi_norm_of([&](double l) { return law.log_mgf(l); }, chi, opt), 0};
  // Sub-Gaussian laws often attain the sup as lambda -> 0; add nodes near 0.
  NormOptions fine = opt;
  fine.lambda_grid = chi.grid();
  for (double l : {1e-3, 3e-3, 1e-2}) {
    fine.lambda_grid.push_back(l);
    fine.lambda_grid.push_back(-l);
  }
  return {bchi_norm_of([&](double l) { return law.log_mgf(l); }, chi, fine), 0};
}

NormResult bchi_norm(const RandomSample& sample, const LogMgfFunction& chi, const NormOptions& opt) {
  if (sample.values.empty()) throw Error(ErrorKind::InvalidArgument, "empty sample");
  require_centered(sample.values, opt.center_sigmas, "bchi_norm");
  return {bchi_norm_of([&](double l) { return log_mean_exp(sample.values, l); }, chi, opt),
          sample.values.size()};
}

// ---------------------------------------------------------------------------
// Orlicz generators

OrliczGenerator OrliczGenerator::power_exp(double p) {
  OrliczGenerator g;
  g.name_ = p == 1.0 ? "exp" : (p == 2.0 ? "gauss2" : "power-exp(" + std::to_string(p) + ")");
  g.forward_ = [p](double u) { return u <= 0.0 ? 0.0 : std::expm1(std::pow(u, p)); };
  g.inverse_ = [p](double v) { return v <= 0.0 ? 0.0 : std::pow(std::log1p(v), 1.0 / p); };
  g.log_forward_ = [p](double u) {
    if (u <= 0.0) return -kInf;
    const double t = std::pow(u, p);
    return t > 30.0 ? t + std::log1p(-std::exp(-t)) : std::log(std::expm1(t));
  };
  g.check_top_ = p > 0.0 ? std::min(4.0, std::pow(600.0, 1.0 / p)) : 4.0;
  return g;
}

OrliczGenerator OrliczGenerator::gauss2() { return power_exp(2.0); }

OrliczGenerator OrliczGenerator::table(std::vector<double> u, std::vector<double> values) {
  if (u.size() != values.size() || u.size() < 3)
    throw Error(ErrorKind::InvalidGenerator, "table needs >= 3 matching (u, Phi) pairs");
  if (u.front() != 0.0 || values.front() != 0.0)
    throw Error(ErrorKind::InvalidGenerator, "table must start at (0, 0)");
  for (std::size_t i = 0; i + 1 < u.size(); ++i)
    if (!(u[i] < u[i + 1]) || !(values[i] < values[i + 1]))
      throw Error(ErrorKind::InvalidGenerator, "table must be strictly increasing");
  auto us = std::make_shared<const std::vector<double>>(std::move(u));
  auto vs = std::make_shared<const std::vector<double>>(std::move(values));
  auto piecewise = [](const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= 0.0) return 0.0;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t k = it == xs.end() ? xs.size() - 2 : static_cast<std::size_t>(it - xs.begin()) - 1;
    const double t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + t * (ys[k + 1] - ys[k]);
  };
  OrliczGenerator g;
  g.name_ = "table";
  g.forward_ = [=](double x) { return piecewise(*us, *vs, x); };
  g.inverse_ = [=](double y) { return piecewise(*vs, *us, y); };
  g.log_forward_ = [=](double x) { return std::log(piecewise(*us, *vs, x)); };
  g.u_max_ = us->back();
  g.check_top_ = us->back();
  return g;
}

OrliczGenerator OrliczGenerator::from_name(const std::string& name, double p) {
  OrliczGenerator g = [&] {
    if (name == "gauss2") return gauss2();
    if (name == "power-exp") return power_exp(p);
    if (name == "exp") return power_exp(1.0);
    throw Error(ErrorKind::InvalidGenerator, "unknown Orlicz generator '" + name + "'");
  }();
  g.validate();
  return g;
}

void OrliczGenerator::validate() const {
  if (forward_(0.0) != 0.0) throw Error(ErrorKind::InvalidGenerator, name_ + ": Phi(0) != 0");
  constexpr int steps = 200;
  double prev = -kInf;
  for (int i = 1; i <= steps; ++i) {
    const double u = check_top_ * i / steps;
    const double lf = log_forward_(u);
    if (!(lf > prev))
      throw Error(ErrorKind::InvalidGenerator, name_ + ": not strictly increasing near u=" +
                                                   std::to_string(u));
    prev = lf;
    const double back = inverse_(forward_(u));
    if (std::abs(back - u) > 1e-9 * std::max(1.0, u))
      throw Error(ErrorKind::InvalidGenerator, name_ + ": inverse round trip fails at u=" +
                                                   std::to_string(u));
  }
  for (double lambda : {1.0, 2.0, 4.0}) {
    const double top = log_forward_(u_max_) - lambda * u_max_;
    const double half = log_forward_(0.5 * u_max_) - 0.5 * lambda * u_max_;
    if (!(top > half))
      throw Error(ErrorKind::InvalidGenerator,
                  name_ + ": Phi(u)/exp(" + std::to_string(lambda) +
                      " u) does not grow; Phi must outgrow every exponential (super-exponential growth required)");
  }
}

double luxemburg_norm(const RandomSample& sample, const OrliczGenerator& phi, double rel_tol) {
  if (sample.values.empty()) throw Error(ErrorKind::InvalidArgument, "empty sample");
  double top = 0.0;
  for (double x : sample.values) top = std::max(top, std::abs(x));
  if (top == 0.0) return 0.0;
  auto mean_phi = [&](double tau) {
    double s = 0.0;
    for (double x : sample.values) s += phi(std::abs(x) / tau);
    return s / static_cast<double>(sample.values.size());
  };
  double hi = top / phi.inverse(1.0), lo = 0.0;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (mean_phi(mid) <= 1.0 ? hi : lo) = mid;
  }
  return hi;
}

double luxemburg_norm(const ScalarLaw& law, const OrliczGenerator& phi, double rel_tol) {
  const double s = std::abs(law.scale());
  if (law.kind() == ScalarLaw::Kind::zero || s == 0.0) return 0.0;
  double hi = s;
  while (!(law.orlicz_mean(phi, hi) <= 1.0)) {
    hi *= 2.0;
    if (hi > 1e6 * s) return kInf;
  }
  while (law.orlicz_mean(phi, 0.5 * hi) <= 1.0) hi *= 0.5;
  double lo = 0.5 * hi;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (law.orlicz_mean(phi, mid) <= 1.0 ? hi : lo) = mid;
  }
  return hi;
}

void write_function_csv(const std::filesystem::path& path, std::span<const double> xs,
                        std::span<const double> ys, const std::string& x_name) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.precision(17);
  out << x_name << ",value\n";
  for (std::size_t i = 0; i < xs.size(); ++i) out << xs[i] << ',' << ys[i] << '\n';
}

}  // namespace tightlab
