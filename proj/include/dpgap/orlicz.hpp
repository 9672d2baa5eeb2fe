#pragma once

// N-functions of Zygmund type t^p log^gamma(e+t), their conjugates and the
// Luxemburg norms they generate.
//
// Convention: no 1/p prefactor. Every gap/no-gap statement is invariant under
// positive scalar factors, so OrliczFunction carries a separate `scale`.

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dpgap/geometry.hpp"

namespace dpgap {

struct LogPowerParams {
  double p = 2.0;
  double gamma = 0.0;

  friend bool operator==(const LogPowerParams&, const LogPowerParams&) = default;
};

/// Exponents of the conjugate class: (p', gamma / (1 - p)).
///
/// The result describes phi* only up to growth equivalence; it is *not* the
/// exact Legendre transform. Exponents are pushed through exact rational
/// arithmetic whenever they have a short continued-fraction expansion, so the
/// double conjugate returns the input bit for bit.
LogPowerParams conjugate_log_power(double p, double gamma);
inline LogPowerParams conjugate_log_power(const LogPowerParams& lp) {
  return conjugate_log_power(lp.p, lp.gamma);
}

class ConjugateTable;

class OrliczFunction {
 public:
  enum class Kind { LogPower, PurePower, TabulatedConjugate };

  /// scale * t^p log^gamma(e+t), convexified near zero when gamma < 1 - p.
  static OrliczFunction log_power(double p, double gamma, double scale = 1.0);
  /// coef * t^p
  static OrliczFunction pure_power(double coef, double p);
  /// Numeric Legendre transform of `base`, cached on 512 log-spaced nodes.
  static OrliczFunction tabulated_conjugate(const OrliczFunction& base);

  OrliczFunction scaled(double factor) const;

  Kind kind() const;
  double scale() const { return scale_; }
  /// Non-null for Kind::LogPower.
  const LogPowerParams* log_power_params() const;
  /// Non-null for Kind::PurePower; first = coef, second = p.
  const std::pair<double, double>* pure_power_params() const;
  const ConjugateTable* table() const;

  /// Knot below which a convex substitute replaces the raw formula (0 if none).
  double convexification_knot() const;

  double operator()(double t) const { return eval(t); }
  double eval(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;
  /// f'(t)/t, with its limit at t = 0.
  double derivative_over_t(double t) const;
  /// t f'(t) / f(t); equals the exponent for pure powers.
  double growth_index(double t) const;

  struct Jet {
    double value = 0.0;
    double d1_over_t = 0.0;  ///< f'(t)/t
    double d2 = 0.0;         ///< f''(t)
  };
  /// f, f'/t and f'' from a single decomposition.
  Jet jet(double t) const;

  // Log-space access, valid far beyond the double range of t itself.
  // Arguments are tau = log t (or sigma = log s).

  /// log(f(t) / t^k), computed without forming t^k.
  double log_ratio(double tau, double k = 0.0) const;
  /// log(f'(t) / t^k).
  double log_derivative_ratio(double tau, double k = 0.0) const;
  /// t f''(t) / f'(t), the slope of log f' against log t.
  double derivative_log_slope(double tau) const;
  /// log of (f')^{-1}(e^sigma), i.e. log of (f*)'(s).
  double log_inverse_derivative(double sigma) const;
  /// Power q with f = t^q times a slowly varying factor at infinity.
  double leading_exponent() const;
  /// delta with log_inverse_derivative(sigma) = sigma / (q - 1) + delta. Stays
  /// accurate when sigma is far too large for the sum to resolve delta.
  double log_inverse_derivative_offset(double sigma) const;

  nlohmann::json to_json() const;
  static OrliczFunction from_json(const nlohmann::json& j);

 private:
  struct LogPowerImpl {
    LogPowerParams params;
    double knot = 0.0;  // substitute a t^p + b t^{p+1} below the knot
    double a = 0.0;
    double b = 0.0;
  };
  struct PurePowerImpl {
    std::pair<double, double> params;  // coef, p
  };
  struct TableImpl {
    std::shared_ptr<const ConjugateTable> table;
  };
  // f = scale t^p A, f' = f index / t, f'' = f' slope / t.
  struct Decomposition {
    double p = 0.0;
    double log_scale = 0.0;
    double log_a = 0.0;
    double index = 0.0;
    double slope = 0.0;
  };
  Decomposition decompose(double tau) const;

  explicit OrliczFunction(std::variant<LogPowerImpl, PurePowerImpl, TableImpl> impl,
                          double scale)
      : impl_(std::move(impl)), scale_(scale) {}

  std::variant<LogPowerImpl, PurePowerImpl, TableImpl> impl_;
  double scale_ = 1.0;
};

/// Hermite table of log f* against log s, with exact nodal slopes.
class ConjugateTable {
 public:
  struct Node {
    double sigma;      // log s
    double log_value;  // log f*(s)
    double slope;      // d log f* / d log s = s t*(s) / f*(s)
  };

  static constexpr int kNodes = 512;

  static std::shared_ptr<const ConjugateTable> build(const OrliczFunction& base);
  explicit ConjugateTable(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  double sigma_min() const { return nodes_.front().sigma; }
  double sigma_max() const { return nodes_.back().sigma; }

  /// Interpolated log f*, its first and second derivative in sigma.
  void interpolate(double sigma, double& value, double& d1, double& d2) const;
  /// value - q sigma, formed without cancellation in the extrapolated ranges.
  double reduced_value(double sigma, double q) const;

 private:
  std::vector<Node> nodes_;
};

/// sup_t (s t - f(t)) via bisection on f'(t) = s over t in [1e-12, 1e12].
/// Throws UNBOUNDED_CONJUGATE when f' stays below s on the bracket.
double conjugate_numeric(const OrliczFunction& f, double s);

/// Exact conjugate where a closed form exists (pure powers), numeric otherwise.
double conjugate_value(const OrliczFunction& f, double s);

/// f(t) + f*(s) - t s; non-negative up to rounding (Young's inequality).
double young_gap(const OrliczFunction& f, double t, double s);

/// sup over the grid of f(2t)/f(t), with 0/0 read as 1.
double delta2_estimate(const OrliczFunction& f, std::span<const double> t_grid);

/// Analytic Delta_2 bound for a log-power on [t_min, inf):
/// 2^p (1 + ln 2 / ln(e + t_min))^max(gamma, 0).
double delta2_bound(const LogPowerParams& lp, double t_min);

struct GrowthIndices {
  double lower = 0.0;  ///< inf of t f'/f; > 1 means Nabla_2 with exponent `lower`
  double upper = 0.0;  ///< sup of t f'/f; Delta_2 constant <= 2^upper
};
GrowthIndices growth_indices(const OrliczFunction& f, std::span<const double> t_grid);

std::vector<double> log_grid(double lo, double hi, int n);

/// Spatial weight of a double-phase integrand.
struct Weight {
  enum class Kind { Checkerboard, Constant };
  Kind kind = Kind::Checkerboard;
  double value = 0.0;  ///< used by Kind::Constant, must lie in [0, 1]

  double operator()(const Point2& x) const {
    return kind == Kind::Checkerboard ? static_cast<double>(eval_weight(x)) : value;
  }
};

/// Phi(x, t) = phi(t) + a(x) psi(t).
struct DoublePhase {
  OrliczFunction phi;
  OrliczFunction psi;
  Weight weight{};

  double eval(const Point2& x, double t) const { return eval_phase(weight(x), t); }
  double eval_phase(double a, double t) const {
    return a == 0.0 ? phi.eval(t) : phi.eval(t) + a * psi.eval(t);
  }
  double derivative_phase(double a, double t) const {
    return a == 0.0 ? phi.derivative(t) : phi.derivative(t) + a * psi.derivative(t);
  }

  /// phi = t^p log^-beta(e+t), psi = t^p log^alpha(e+t) on the checkerboard.
  static DoublePhase borderline(double alpha, double beta, double p = 2.0);
};

struct DominationConstants {
  double c3 = 0.0;
  double c4 = 0.0;
};
/// Constants with phi <= c3 psi + c4 on the grid: c3 = sup_{t>=1} phi/psi,
/// c4 = sup_{t<1} phi.
DominationConstants domination_constants(const OrliczFunction& phi, const OrliczFunction& psi,
                                         std::span<const double> t_grid);

struct FieldSampleValue {
  Point2 x;
  double value = 0.0;
  double weight = 0.0;  ///< quadrature weight, must be positive
};

/// inf{g > 0 : sum w Phi(x, |f|/g) <= 1}, relative tolerance 1e-10.
double luxemburg_norm(std::span<const FieldSampleValue> samples, const OrliczFunction& f);
double luxemburg_norm(std::span<const FieldSampleValue> samples, const DoublePhase& f);

/// Sum of w f(|value|) over the samples.
double modular(std::span<const FieldSampleValue> samples, const OrliczFunction& f);

struct HolderExponents {
  double a = 4.0, alpha = 1.0;  ///< first factor in L^a log^alpha L
  double b = 4.0, beta = -1.0;  ///< second factor in L^b log^beta L
  double c() const { return 1.0 / (1.0 / a + 1.0 / b); }
  double gamma() const { return c() * (alpha / a + beta / b); }
};

/// ||AB|| / (||A|| ||B||) in the Zygmund norms fixed by `e`; the Holder
/// inequality bounds this by a constant depending only on the exponents.
double zygmund_holder_ratio(std::span<const FieldSampleValue> A,
                            std::span<const FieldSampleValue> B, const HolderExponents& e);

}  // namespace dpgap
