#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tightlab {

/// Symmetric grid of `points` nodes on [-half_width, half_width].
std::vector<double> symmetric_grid(double half_width = 4.0, std::size_t points = 201);

/// Numerically careful log cosh and log I0 (modified Bessel), both even.
double log_cosh(double x);
double log_bessel_i0(double x);

class OrliczGenerator;

/// Law of a centred scalar random variable with a closed-form log-MGF.
class ScalarLaw {
 public:
  enum class Kind { zero, gaussian, rademacher, cosine, student_t };

  static ScalarLaw zero() { return ScalarLaw(Kind::zero, 0.0); }
  static ScalarLaw gaussian(double sd) { return ScalarLaw(Kind::gaussian, sd); }
  /// +-scale with probability 1/2 each.
  static ScalarLaw rademacher(double scale) { return ScalarLaw(Kind::rademacher, scale); }
  /// amplitude * cos(U), U uniform on [0, 2pi).
  static ScalarLaw cosine(double amplitude) { return ScalarLaw(Kind::cosine, amplitude); }
  /// scale * T_dof.
  static ScalarLaw student_t(double scale, double dof) { return ScalarLaw(Kind::student_t, scale, dof); }

  Kind kind() const noexcept { return kind_; }
  double scale() const noexcept { return scale_; }
  double dof() const noexcept { return dof_; }

  /// log E exp(lambda X); +inf where the MGF does not exist.
  double log_mgf(double lambda) const;
  double variance() const;
  /// Almost-sure bound on |X| if the law is bounded.
  std::optional<double> bound() const;
  /// E Phi(|X| / tau), +inf when divergent.
  double orlicz_mean(const OrliczGenerator& phi, double tau) const;

 private:
  ScalarLaw(Kind k, double scale, double dof = 0.0) : kind_(k), scale_(scale), dof_(dof) {}
  Kind kind_;
  double scale_;
  double dof_;
};

/// Scalar sample carrier for empirical norms.
struct RandomSample {
  std::vector<double> values;
  std::uint64_t seed = 0;
};

struct Interpolated {
  double value;
  double error_estimate;
};

/// An even convex function on a symmetric lambda grid (phi or chi).
/// Analytic kinds carry an evaluator usable anywhere; tabulated ones
/// interpolate and refuse to extrapolate.
class LogMgfFunction {
 public:
  enum class Kind { gaussian, rademacher, custom, empirical, tabulated };
  using Evaluator = std::function<double(double)>;

  /// Validates evenness, zero at the origin, convexity and finiteness.
  LogMgfFunction(Kind kind, std::vector<double> grid, Evaluator eval, std::string name = {});
  static LogMgfFunction tabulated(std::vector<double> grid, std::vector<double> values);
  static LogMgfFunction gaussian(double variance, std::vector<double> grid = symmetric_grid());
  static LogMgfFunction rademacher(double amplitude, std::vector<double> grid = symmetric_grid());
  static LogMgfFunction quadratic(double c, std::vector<double> grid = symmetric_grid());

  double operator()(double lambda) const;
  /// Cubic interpolation from the table, with the cubic-vs-quadratic gap as error proxy.
  Interpolated interpolate(double lambda) const;

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  bool has_evaluator() const noexcept { return static_cast<bool>(eval_); }
  double grid_max() const noexcept { return grid_.back(); }
  std::size_t sample_size() const noexcept { return sample_size_; }
  void set_sample_size(std::size_t n) { sample_size_ = n; }

 private:
  Kind kind_;
  std::vector<double> grid_;
  std::vector<double> values_;
  Evaluator eval_;
  std::string name_;
  std::size_t sample_size_ = 0;
};

struct PhiOptions {
  double log_overflow = 700.0;
  double center_sigmas = 5.0;
};

/// phi(lambda) = sup_t max_+- log E exp(+-lambda xi(t)) from per-point laws.
LogMgfFunction phi_of(std::span<const ScalarLaw> laws, std::vector<double> grid = symmetric_grid());

/// Empirical phi from draws laid out row-major as (draw, point).
LogMgfFunction phi_of_samples(std::span<const double> draws, std::size_t points,
                              std::vector<double> grid = symmetric_grid(), PhiOptions opt = {});

struct Envelope {
  double c1;
  double c2;
};

/// Min and max of phi(lambda)/lambda^2 over grid nodes with 0 < |lambda| <= 1.
Envelope envelope_constants(const LogMgfFunction& phi);

struct ChiValue {
  double value;
  std::size_t argmax_n;  ///< 0 when the n -> infinity limit attains the sup
};

struct ChiOptions {
  std::size_t n_cap = 1'000'000;
  double interp_tol = 1e-6;
};

/// sup over n <= n_cap of n * phi(lambda / sqrt n), joined with the
/// curvature limit lambda^2 * lim phi(mu)/mu^2.
ChiValue chi_of(const LogMgfFunction& phi, double lambda, ChiOptions opt = {});

/// chi as a function: tabulated densely for speed, exact chi_of elsewhere.
/// `grid` (default: phi's grid) sets the nodes used by legendre; a wider grid
/// widens the slope range of the conjugate. Tabulated phi caps it at phi's grid.
LogMgfFunction chi_function(const LogMgfFunction& phi, ChiOptions opt = {}, std::vector<double> grid = {});

struct LegendreValue {
  double value;
  double argmax;
  bool lower_bound;  ///< sup hit the grid edge (SlopeOutOfRange)
};

/// f*(x) = sup_lambda (lambda |x| - f(lambda)) over the grid of f, refined by
/// golden-section search around the best node.
LegendreValue legendre(const LogMgfFunction& f, double x);

/// A conjugate x -> f*(x), either numeric or closed form.
class Conjugate {
 public:
  explicit Conjugate(LogMgfFunction f) : f_(std::move(f)) {}
  /// x^2 / (4c): conjugate of c * lambda^2, no grid limits.
  static Conjugate quadratic(double c);

  LegendreValue operator()(double x) const;

 private:
  Conjugate() = default;
  std::optional<LogMgfFunction> f_;
  double closed_c_ = 0.0;
};

/// Y(z) = exp(chi*(z)) - 1 and its inverse.
class YoungPair {
 public:
  using Fn = std::function<double(double)>;

  /// Checks strict monotonicity of chi* on `check_points` nodes of (0, z_max].
  YoungPair(Fn chi_star, double z_max, std::size_t check_points = 256);
  static YoungPair from_conjugate(const Conjugate& cs, double z_max);
  /// chi*(z) = z^2/2, Y_inv(u) = sqrt(2 ln(1+u)).
  static YoungPair gaussian();

  double forward(double z) const;
  double inverse(double u) const;
  double z_max() const noexcept { return z_max_; }

 private:
  YoungPair() = default;
  Fn chi_star_;
  Fn closed_inverse_;
  double z_max_ = 0.0;
};

struct NormOptions {
  double tau_max = 1e3;
  double rel_tol = 1e-6;
  double center_sigmas = 5.0;
  std::vector<double> lambda_grid;  ///< empty: nonzero nodes of chi's grid
};

struct NormResult {
  double value;
  std::size_t sample_size = 0;  ///< 0 in analytic mode
};

/// inf{ tau : log E exp(lambda eta) <= chi(lambda tau) on the test grid }.
NormResult bchi_norm(const ScalarLaw& law, const LogMgfFunction& chi, const NormOptions& opt = {});
NormResult bchi_norm(const RandomSample& sample, const LogMgfFunction& chi,
                     const NormOptions& opt = {});
/// Core bisection over an arbitrary log-MGF.
double bchi_norm_of(const std::function<double(double)>& log_mgf, const LogMgfFunction& chi,
                    const NormOptions& opt);

/// Young-Orlicz function Phi with its inverse.
class OrliczGenerator {
 public:
  /// exp(u^2) - 1.
  static OrliczGenerator gauss2();
  /// exp(u^p) - 1. p <= 1 constructs but fails validation.
  static OrliczGenerator power_exp(double p);
  /// Piecewise linear through (u_i, Phi_i), u_0 = Phi_0 = 0.
  static OrliczGenerator table(std::vector<double> u, std::vector<double> values);
  /// "gauss2", "power-exp" (needs p), "exp"; throws InvalidGenerator on failure.
  static OrliczGenerator from_name(const std::string& name, double p = 2.0);

  double operator()(double u) const { return forward_(u); }
  double inverse(double v) const { return inverse_(v); }
  double log_forward(double u) const { return log_forward_(u); }
  const std::string& name() const noexcept { return name_; }
  double u_max() const noexcept { return u_max_; }

  /// Throws InvalidGenerator naming the violated property (growth, monotonicity, inverse).
  void validate() const;

 private:
  std::string name_;
  std::function<double(double)> forward_;
  std::function<double(double)> inverse_;
  std::function<double(double)> log_forward_;
  double u_max_ = 1e6;
  double check_top_ = 4.0;
};

double luxemburg_norm(const RandomSample& sample, const OrliczGenerator& phi, double rel_tol = 1e-6);
/// Analytic mode, by quadrature of E Phi(|X|/tau). +inf if no tau works.
double luxemburg_norm(const ScalarLaw& law, const OrliczGenerator& phi, double rel_tol = 1e-6);

/// Two-column CSV (header `<x_name>,value`).
void write_function_csv(const std::filesystem::path& path, std::span<const double> xs,
                        std::span<const double> ys, const std::string& x_name = "lambda");

}  // namespace tightlab
