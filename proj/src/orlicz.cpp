#include "dpgap/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>

#include "dpgap/errors.hpp"

namespace dpgap {

namespace {

constexpr double kE = std::numbers::e;
constexpr double kMaxInput = 1e300;
constexpr double kLinearRange = 1e8;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_argument(double t, const char* where) {
  if (!std::isfinite(t) || t < 0.0 || t > kMaxInput) {
    throw domain_error(std::string(where) + ": argument must be finite, >= 0 and <= 1e300");
  }
}

// log(e + t) for t = exp(tau), stable for any tau.
double log_e_plus(double tau) {
  if (tau > 30.0) return tau + std::log1p(kE * std::exp(-tau));
  return std::log(kE + std::exp(tau));
}

// t / (e + t)
double shift_ratio(double tau) {
  if (tau < -700.0) return 0.0;
  return 1.0 / (1.0 + kE * std::exp(-tau));
}

// f = t^p A, f' = t^{p-1} A index, f'' = t^{p-2} A index slope.
struct Parts {
  double log_a = 0.0;
  double index = 0.0;
  double slope = 0.0;
};

struct RawLogPower {
  double p;
  double gamma;

  double d1(double tau) const {
    return p + gamma * shift_ratio(tau) / log_e_plus(tau);
  }
  double d2(double tau) const {
    const double w = shift_ratio(tau);
    const double L = log_e_plus(tau);
    return p * (p - 1.0) + 2.0 * p * gamma * w / L + gamma * (gamma - 1.0) * w * w / (L * L) -
           gamma * w * w / L;
  }
  Parts parts(double tau) const {
    const double L = log_e_plus(tau);
    const double i = d1(tau);
    return {gamma * std::log(L), i, d2(tau) / i};
  }
};

template <class F>
double bisect_sign_change(F&& f, double lo, double hi) {
  // f(lo) and f(hi) have opposite signs; returns the upper end of the final bracket.
  const bool lo_negative = f(lo) < 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0.0) == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

struct Rational {
  long long num;
  long long den;
};

std::optional<Rational> exact_rational(double x) {
  if (!std::isfinite(x)) return std::nullopt;
  // Continued fraction convergents h/k with k <= 1e7.
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(r);
    if (std::abs(fl) > 1e12) break;
    const auto a = static_cast<long long>(fl);
    const long long h2 = a * h1 + h0;
    const long long k2 = a * k1 + k0;
    if (k2 > 10'000'000) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    if (static_cast<double>(h1) / static_cast<double>(k1) == x) return Rational{h1, k1};
    const double frac = r - fl;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

Rational reduce(long long num, long long den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = std::gcd(num < 0 ? -num : num, den);
  return g == 0 ? Rational{num, den} : Rational{num / g, den / g};
}

double to_double(const Rational& r) {
  return static_cast<double>(r.num) / static_cast<double>(r.den);
}

}  // namespace

// ---------------------------------------------------------------------------

LogPowerParams conjugate_log_power(double p, double gamma) {
  if (!std::isfinite(p) || !std::isfinite(gamma) || p <= 1.0) {
    throw domain_error("conjugate_log_power: requires finite p > 1 and finite gamma");
  }
  const auto rp = exact_rational(p);
  const auto rg = exact_rational(gamma);
  if (rp && rg) {
    const Rational pc = reduce(rp->num, rp->num - rp->den);
    // gamma / (1 - p) = (gn/gd) / ((pd - pn)/pd)
    const Rational gc = reduce(rg->num * rp->den, rg->den * (rp->den - rp->num));
    return {to_double(pc), to_double(gc)};
  }
  return {p / (p - 1.0), gamma / (1.0 - p)};
}

// ---------------------------------------------------------------------------
// OrliczFunction

OrliczFunction OrliczFunction::log_power(double p, double gamma, double scale) {
  if (!std::isfinite(p) || p <= 1.0) throw domain_error("log_power: requires p > 1");
  if (!std::isfinite(gamma)) throw domain_error("log_power: gamma must be finite");
  if (!std::isfinite(scale) || scale <= 0.0) throw domain_error("log_power: scale must be > 0");

  LogPowerImpl impl;
  impl.params = {p, gamma};
  impl.knot = -kInf;
  if (gamma < 1.0 - p) {
    const RawLogPower raw{p, gamma};
    const double q_min = 0.5 * (p + 1.0);
    constexpr int kScan = 8000;
    constexpr double kTauLo = -25.0;
    constexpr double kTauHi = 2000.0;
    const double step = (kTauHi - kTauLo) / (kScan - 1);
    int last_concave = -1;
    for (int j = 0; j < kScan; ++j) {
      if (raw.d2(kTauLo + j * step) < 0.0) last_concave = j;
    }
    if (last_concave >= 0) {
      if (last_concave == kScan - 1) {
        throw domain_error("log_power: non-convex beyond the scanned range; gamma too negative");
      }
      const double lo = kTauLo + last_concave * step;
      double knot = bisect_sign_change([&](double tau) { return raw.d2(tau); }, lo, lo + step);
      if (raw.d1(knot) < q_min) {
        auto excess = [&](double tau) { return raw.d1(tau) - q_min; };
        int j = last_concave + 1;
        while (j < kScan && excess(kTauLo + j * step) < 0.0) ++j;
        if (j == kScan) throw domain_error("log_power: growth index never reaches (p+1)/2");
        const double hi = kTauLo + j * step;
        knot = bisect_sign_change(excess, std::max(knot, hi - step), hi);
      }
      impl.knot = knot;
      const Parts at = raw.parts(knot);
      impl.a = at.log_a;  // log A0
      impl.b = at.index;  // index at the knot
    }
  }
  return OrliczFunction(impl, scale);
}

OrliczFunction OrliczFunction::pure_power(double coef, double p) {
  if (!std::isfinite(coef) || coef <= 0.0) throw domain_error("pure_power: coef must be > 0");
  if (!std::isfinite(p) || p <= 1.0) throw domain_error("pure_power: requires p > 1");
  return OrliczFunction(PurePowerImpl{{coef, p}}, 1.0);
}

OrliczFunction OrliczFunction::tabulated_conjugate(const OrliczFunction& base) {
  return OrliczFunction(TableImpl{ConjugateTable::build(base)}, 1.0);
}

OrliczFunction OrliczFunction::scaled(double factor) const {
  if (!std::isfinite(factor) || factor <= 0.0) throw domain_error("scaled: factor must be > 0");
  OrliczFunction out = *this;
  if (auto* pp = std::get_if<PurePowerImpl>(&out.impl_)) {
    pp->params.first *= factor;
  } else {
    out.scale_ *= factor;
  }
  return out;
}

OrliczFunction::Kind OrliczFunction::kind() const {
  switch (impl_.index()) {
    case 0:
      return Kind::LogPower;
    case 1:
      return Kind::PurePower;
    default:
      return Kind::TabulatedConjugate;
  }
}

const LogPowerParams* OrliczFunction::log_power_params() const {
  const auto* lp = std::get_if<LogPowerImpl>(&impl_);
  return lp ? &lp->params : nullptr;
}

const std::pair<double, double>* OrliczFunction::pure_power_params() const {
  const auto* pp = std::get_if<PurePowerImpl>(&impl_);
  return pp ? &pp->params : nullptr;
}

const ConjugateTable* OrliczFunction::table() const {
  const auto* tb = std::get_if<TableImpl>(&impl_);
  return tb ? tb->table.get() : nullptr;
}

double OrliczFunction::convexification_knot() const {
  const auto* lp = std::get_if<LogPowerImpl>(&impl_);
  if (!lp || lp->knot == -kInf) return 0.0;
  return std::exp(lp->knot);
}

namespace {

// Parts for a log-power including the substitute below the knot. The
// substitute is t^p A0 [(p+1-i0) + (i0-p) r] with r = t / t0.
Parts log_power_parts(const LogPowerParams& lp, double knot, double log_a0, double i0,
                      double tau) {
  if (tau >= knot) return RawLogPower{lp.p, lp.gamma}.parts(tau);
  const double p = lp.p;
  const double r = std::exp(tau - knot);
  const double A = (p + 1.0 - i0) + (i0 - p) * r;
  const double B = p * (p + 1.0 - i0) + (p + 1.0) * (i0 - p) * r;
  const double C = p * (p - 1.0) * (p + 1.0 - i0) + (p + 1.0) * p * (i0 - p) * r;
  return {log_a0 + std::log(A), B / A, C / B};
}

}  // namespace

OrliczFunction::Decomposition OrliczFunction::decompose(double tau) const {
  Decomposition d;
  d.log_scale = std::log(scale_);
  Parts parts;
  if (const auto* lp = std::get_if<LogPowerImpl>(&impl_)) {
    d.p = lp->params.p;
    parts = log_power_parts(lp->params, lp->knot, lp->a, lp->b, tau);
  } else if (const auto* pp = std::get_if<PurePowerImpl>(&impl_)) {
    d.p = pp->params.second;
    parts = {std::log(pp->params.first), d.p, d.p - 1.0};
  } else {
    const auto& table = *std::get<TableImpl>(impl_).table;
    double v, d1, d2;
    table.interpolate(tau, v, d1, d2);
    d.p = table.nodes().back().slope;
    parts = {table.reduced_value(tau, d.p), d1, d1 - 1.0 + d2 / d1};
  }
  d.log_a = parts.log_a;
  d.index = parts.index;
  d.slope = parts.slope;
  return d;
}

double OrliczFunction::log_ratio(double tau, double k) const {
  const auto d = decompose(tau);
  return d.log_scale + (d.p - k) * tau + d.log_a;
}

double OrliczFunction::log_derivative_ratio(double tau, double k) const {
  const auto d = decompose(tau);
  return d.log_scale + (d.p - 1.0 - k) * tau + d.log_a + std::log(d.index);
}

double OrliczFunction::derivative_log_slope(double tau) const {
  return decompose(tau).slope;
}

double OrliczFunction::growth_index(double t) const {
  check_argument(t, "growth_index");
  if (t == 0.0) {
    if (const auto* lp = std::get_if<LogPowerImpl>(&impl_)) return lp->params.p;
    if (const auto* pp = std::get_if<PurePowerImpl>(&impl_)) return pp->params.second;
    return table()->nodes().front().slope;
  }
  return decompose(std::log(t)).index;
}

double OrliczFunction::eval(double t) const {
  check_argument(t, "eval");
  if (t == 0.0) return 0.0;
  const double tau = std::log(t);
  const auto d = decompose(tau);
  if (t > kLinearRange) return std::exp(d.log_scale + d.p * tau + d.log_a);
  return scale_ * std::pow(t, d.p) * std::exp(d.log_a);
}

OrliczFunction::Jet OrliczFunction::jet(double t) const {
  check_argument(t, "jet");
  if (t < 1e-12) return {eval(t), derivative_over_t(t), second_derivative(t)};
  const double tau = std::log(t);
  const auto d = decompose(tau);
  const double f = t > kLinearRange ? std::exp(d.log_scale + d.p * tau + d.log_a)
                                    : scale_ * std::pow(t, d.p) * std::exp(d.log_a);
  const double d1 = f * d.index / t;
  return {f, d1 / t, d1 * d.slope / t};
}

double OrliczFunction::derivative(double t) const {
  check_argument(t, "derivative");
  if (t == 0.0) return 0.0;
  const double tau = std::log(t);
  const auto d = decompose(tau);
  return std::exp(d.log_scale + (d.p - 1.0) * tau + d.log_a) * d.index;
}

double OrliczFunction::second_derivative(double t) const {
  check_argument(t, "second_derivative");
  if (t == 0.0) {
    const double limit = derivative_over_t(0.0);
    return limit;
  }
  const double tau = std::log(t);
  const auto d = decompose(tau);
  return std::exp(d.log_scale + (d.p - 2.0) * tau + d.log_a) * d.index * d.slope;
}

double OrliczFunction::derivative_over_t(double t) const {
  check_argument(t, "derivative_over_t");
  if (t < 1e-12) {
    // Analytic limit t -> 0.
    double p = 0.0;
    double limit_coef = 0.0;
    if (const auto* lp = std::get_if<LogPowerImpl>(&impl_)) {
      p = lp->params.p;
      const Parts at0 = log_power_parts(lp->params, lp->knot, lp->a, lp->b, -kInf);
      limit_coef = scale_ * p * std::exp(at0.log_a);
    } else if (const auto* pp = std::get_if<PurePowerImpl>(&impl_)) {
      p = pp->params.second;
      limit_coef = pp->params.first * p;
    } else {
      // Table extrapolation: f ~ C s^q with q the first nodal slope.
      const auto& n0 = table()->nodes().front();
      p = n0.slope;
      limit_coef = n0.slope * std::exp(n0.log_value - n0.slope * n0.sigma);
    }
    if (p == 2.0) return limit_coef;
    if (t == 0.0) return p > 2.0 ? 0.0 : kInf;
    return limit_coef * std::pow(t, p - 2.0);
  }
  const double tau = std::log(t);
  const auto d = decompose(tau);
  return std::exp(d.log_scale + (d.p - 2.0) * tau + d.log_a) * d.index;
}

double OrliczFunction::leading_exponent() const {
  if (const auto* lp = std::get_if<LogPowerImpl>(&impl_)) return lp->params.p;
  if (const auto* pp = std::get_if<PurePowerImpl>(&impl_)) return pp->params.second;
  return table()->nodes().back().slope;
}

double OrliczFunction::log_inverse_derivative(double sigma) const {
  if (!std::isfinite(sigma)) throw domain_error("log_inverse_derivative: sigma must be finite");
  return sigma / (leading_exponent() - 1.0) + log_inverse_derivative_offset(sigma);
}

double OrliczFunction::log_inverse_derivative_offset(double sigma) const {
  if (!std::isfinite(sigma)) throw domain_error("log_inverse_derivative: sigma must be finite");
  const double q = leading_exponent();
  if (const auto* pp = std::get_if<PurePowerImpl>(&impl_)) {
    return -std::log(pp->params.first * q) / (q - 1.0);
  }
  // F(delta) = log f'(t) - sigma at log t = base + delta, with the power split off
  // so no term of size sigma is ever formed. F' = slope > 0.
  const double base = sigma / (q - 1.0);
  auto F = [&](double delta) {
    return (q - 1.0) * delta + log_derivative_ratio(base + delta, q - 1.0);
  };
  double guess = -std::log(scale_ * q) / (q - 1.0);
  double lo = guess - 1.0;
  double hi = guess + 1.0;
  double width = 1.0;
  int expansions = 0;
  while (F(lo) > 0.0) {
    width *= 2.0;
    lo = guess - width;
    if (++expansions > 2000) throw numerical_error("EVALUATION_ERROR", "inverse derivative: no lower bracket");
  }
  width = 1.0;
  while (F(hi) < 0.0) {
    width *= 2.0;
    hi = guess + width;
    if (++expansions > 4000) throw numerical_error("EVALUATION_ERROR", "inverse derivative: no upper bracket");
  }
  double delta = std::clamp(guess, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double value = F(delta);
    if (value == 0.0) return delta;
    if (value < 0.0) {
      lo = delta;
    } else {
      hi = delta;
    }
    const double slope = derivative_log_slope(base + delta);
    double next = delta - value / slope;
    if (!(slope > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    // Rounding of base + delta moves F by eps |base| |slope - (q - 1)|.
    const double noise = std::abs(base * (slope - (q - 1.0)) / slope);
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() *
                       std::max({1.0, std::abs(next), std::isfinite(noise) ? noise : 1.0});
    if (std::abs(next - delta) <= tol || hi - lo <= tol) return next;
    delta = next;
  }
  return delta;
}

// ---------------------------------------------------------------------------
// ConjugateTable

ConjugateTable::ConjugateTable(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw domain_error("ConjugateTable: needs at least two nodes");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i].sigma > nodes_[i - 1].sigma)) {
      throw domain_error("ConjugateTable: sigma nodes must increase");
    }
  }
}

std::shared_ptr<const ConjugateTable> ConjugateTable::build(const OrliczFunction& base) {
  constexpr double kSigmaLo = -8.0 * std::numbers::ln10;
  constexpr double kSigmaHi = 24.0 * std::numbers::ln10;
  std::vector<Node> nodes;
  nodes.reserve(kNodes);
  for (int i = 0; i < kNodes; ++i) {
    const double sigma = kSigmaLo + (kSigmaHi - kSigmaLo) * i / (kNodes - 1);
    const double tau = base.log_inverse_derivative(sigma);
    // f*(s) = s t (1 - 1/index(t)) at the maximiser t.
    const double index = std::exp(base.log_derivative_ratio(tau, -1.0) - base.log_ratio(tau, 0.0));
    if (!(index > 1.0)) {
      throw numerical_error("UNBOUNDED_CONJUGATE", "tabulated_conjugate: growth index <= 1");
    }
    nodes.push_back({sigma, sigma + tau + std::log1p(-1.0 / index), index / (index - 1.0)});
  }
  return std::make_shared<const ConjugateTable>(std::move(nodes));
}

void ConjugateTable::interpolate(double sigma, double& value, double& d1, double& d2) const {
  const Node& first = nodes_.front();
  const Node& last = nodes_.back();
  if (sigma <= first.sigma) {
    value = first.log_value + first.slope * (sigma - first.sigma);
    d1 = first.slope;
    d2 = 0.0;
    return;
  }
  if (sigma >= last.sigma) {
    value = last.log_value + last.slope * (sigma - last.sigma);
    d1 = last.slope;
    d2 = 0.0;
    return;
  }
  const double step = (last.sigma - first.sigma) / static_cast<double>(nodes_.size() - 1);
  auto i = static_cast<std::size_t>((sigma - first.sigma) / step);
  i = std::min(i, nodes_.size() - 2);
  while (i > 0 && sigma < nodes_[i].sigma) --i;
  while (i + 2 < nodes_.size() && sigma > nodes_[i + 1].sigma) ++i;
  const Node& n0 = nodes_[i];
  const Node& n1 = nodes_[i + 1];
  const double h = n1.sigma - n0.sigma;
  const double u = (sigma - n0.sigma) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  value = h00 * n0.log_value + h10 * h * n0.slope + h01 * n1.log_value + h11 * h * n1.slope;
  const double dh00 = 6 * u2 - 6 * u, dh10 = 3 * u2 - 4 * u + 1;
  const double dh01 = -6 * u2 + 6 * u, dh11 = 3 * u2 - 2 * u;
  d1 = (dh00 * n0.log_value + dh01 * n1.log_value) / h + dh10 * n0.slope + dh11 * n1.slope;
  const double ddh00 = 12 * u - 6, ddh10 = 6 * u - 4;
  const double ddh01 = -12 * u + 6, ddh11 = 6 * u - 2;
  d2 = (ddh00 * n0.log_value + ddh01 * n1.log_value) / (h * h) +
       (ddh10 * n0.slope + ddh11 * n1.slope) / h;
}

double ConjugateTable::reduced_value(double sigma, double q) const {
  const Node& first = nodes_.front();
  const Node& last = nodes_.back();
  if (sigma <= first.sigma) {
    return (first.log_value - first.slope * first.sigma) + (first.slope - q) * sigma;
  }
  if (sigma >= last.sigma) {
    return (last.log_value - last.slope * last.sigma) + (last.slope - q) * sigma;
  }
  double v, d1, d2;
  interpolate(sigma, v, d1, d2);
  return v - q * sigma;
}

// ---------------------------------------------------------------------------

double conjugate_numeric(const OrliczFunction& f, double s) {
  check_argument(s, "conjugate_numeric");
  if (s == 0.0) return 0.0;
  constexpr double kLo = 1e-12;
  constexpr double kHi = 1e12;
  if (f.derivative(kHi) < s) {
    throw numerical_error("UNBOUNDED_CONJUGATE",
                          "conjugate_numeric: f' stays below s on [1e-12, 1e12]");
  }
  double lo = kLo;
  double hi = kHi;
  bool geometric = true;
  if (f.derivative(kLo) >= s) {
    lo = 0.0;
    hi = kLo;
    geometric = false;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f.derivative(mid) < s) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-16 * hi) break;
  }
  const double t = geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
  return std::max(0.0, s * t - f.eval(t));
}

double conjugate_value(const OrliczFunction& f, double s) {
  if (const auto* pp = f.pure_power_params()) {
    check_argument(s, "conjugate_value");
    const auto [coef, p] = *pp;
    return (p - 1.0) * coef * std::pow(s / (coef * p), p / (p - 1.0));
  }
  return conjugate_numeric(f, s);
}

double young_gap(const OrliczFunction& f, double t, double s) {
  return f.eval(t) + conjugate_value(f, s) - t * s;
}

double delta2_estimate(const OrliczFunction& f, std::span<const double> t_grid) {
  double sup = 0.0;
  for (double t : t_grid) {
    const double num = f.eval(2.0 * t);
    const double den = f.eval(t);
    sup = std::max(sup, (num == 0.0 && den == 0.0) ? 1.0 : num / den);
  }
  return sup;
}

double delta2_bound(const LogPowerParams& lp, double t_min) {
  const double growth = 1.0 + std::numbers::ln2 / std::log(kE + t_min);
  return std::pow(2.0, lp.p) * std::pow(growth, std::max(lp.gamma, 0.0));
}

GrowthIndices growth_indices(const OrliczFunction& f, std::span<const double> t_grid) {
  GrowthIndices g{kInf, -kInf};
  for (double t : t_grid) {
    const double i = f.growth_index(t);
    g.lower = std::min(g.lower, i);
    g.upper = std::max(g.upper, i);
  }
  return g;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw domain_error("log_grid: need 0 < lo <= hi, n >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? lo : std::exp(a + (b - a) * i / (n - 1));
  out.back() = hi;
  return out;
}

DoublePhase DoublePhase::borderline(double alpha, double beta, double p) {
  return {OrliczFunction::log_power(p, -beta), OrliczFunction::log_power(p, alpha), {}};
}

DominationConstants domination_constants(const OrliczFunction& phi, const OrliczFunction& psi,
                                         std::span<const double> t_grid) {
  DominationConstants c;
  for (double t : t_grid) {
    if (t >= 1.0) {
      c.c3 = std::max(c.c3, phi.eval(t) / psi.eval(t));
    } else {
      c.c4 = std::max(c.c4, phi.eval(t));
    }
  }
  if (c.c4 == 0.0) c.c4 = phi.eval(1.0);
  return c;
}

// ---------------------------------------------------------------------------
// Luxemburg norms

namespace {

template <class Modular>
double luxemburg_bisect(std::span<const FieldSampleValue> samples, Modular&& modular_at) {
  bool any = false;
  for (const auto& s : samples) {
    if (!std::isfinite(s.value) || !(s.weight > 0.0) || !std::isfinite(s.weight)) {
      throw domain_error("luxemburg_norm: values must be finite and weights positive");
    }
    any = any || s.value != 0.0;
  }
  if (!any) return 0.0;

  double hi = 1.0;
  while (modular_at(hi) > 1.0) {
    hi *= 2.0;
    if (hi > 1e12) {
      throw numerical_error("NORM_OVERFLOW", "luxemburg_norm: modular exceeds 1 up to 1e12");
    }
  }
  double lo = 0.5 * hi;
  while (modular_at(lo) <= 1.0) {
    hi = lo;
    lo *= 0.5;
    if (lo < 1e-300) return hi;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (modular_at(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double safe_eval(const OrliczFunction& f, double t) { return t > kMaxInput ? kInf : f.eval(t); }

}  // namespace

double modular(std::span<const FieldSampleValue> samples, const OrliczFunction& f) {
  double acc = 0.0;
  for (const auto& s : samples) acc += s.weight * safe_eval(f, std::abs(s.value));
  return acc;
}

double luxemburg_norm(std::span<const FieldSampleValue> samples, const OrliczFunction& f) {
  return luxemburg_bisect(samples, [&](double g) {
    double acc = 0.0;
    for (const auto& s : samples) acc += s.weight * safe_eval(f, std::abs(s.value) / g);
    return acc;
  });
}

double luxemburg_norm(std::span<const FieldSampleValue> samples, const DoublePhase& f) {
  return luxemburg_bisect(samples, [&](double g) {
    double acc = 0.0;
    for (const auto& s : samples) {
      const double t = std::abs(s.value) / g;
      const double a = f.weight(s.x);
      acc += s.weight * (safe_eval(f.phi, t) + (a == 0.0 ? 0.0 : a * safe_eval(f.psi, t)));
    }
    return acc;
  });
}

double zygmund_holder_ratio(std::span<const FieldSampleValue> A,
                            std::span<const FieldSampleValue> B, const HolderExponents& e) {
  if (A.size() != B.size()) throw domain_error("zygmund_holder_ratio: sample sets differ in size");
  std::vector<FieldSampleValue> AB(A.begin(), A.end());
  for (std::size_t i = 0; i < AB.size(); ++i) AB[i].value *= B[i].value;
  const double na = luxemburg_norm(A, OrliczFunction::log_power(e.a, e.alpha));
  const double nb = luxemburg_norm(B, OrliczFunction::log_power(e.b, e.beta));
  const double nab = luxemburg_norm(AB, OrliczFunction::log_power(e.c(), e.gamma()));
  return nab / (na * nb);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json OrliczFunction::to_json() const {
  nlohmann::json j;
  if (const auto* lp = std::get_if<LogPowerImpl>(&impl_)) {
    j = {{"kind", "log_power"}, {"p", lp->params.p}, {"gamma", lp->params.gamma}};
    if (scale_ != 1.0) j["scale"] = scale_;
  } else if (const auto* pp = std::get_if<PurePowerImpl>(&impl_)) {
    j = {{"kind", "pure_power"}, {"coef", pp->params.first}, {"p", pp->params.second}};
  } else {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : table()->nodes()) nodes.push_back({n.sigma, n.log_value, n.slope});
    j = {{"kind", "tabulated_conjugate"}, {"nodes", std::move(nodes)}};
    if (scale_ != 1.0) j["scale"] = scale_;
  }
  return j;
}

OrliczFunction OrliczFunction::from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "log_power") {
      return log_power(j.at("p").get<double>(), j.at("gamma").get<double>(),
                       j.value("scale", 1.0));
    }
    if (kind == "pure_power") {
      return pure_power(j.at("coef").get<double>(), j.at("p").get<double>());
    }
    if (kind == "tabulated_conjugate") {
      std::vector<ConjugateTable::Node> nodes;
      for (const auto& n : j.at("nodes")) {
        nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>(), n.at(2).get<double>()});
      }
      OrliczFunction f(TableImpl{std::make_shared<const ConjugateTable>(std::move(nodes))}, 1.0);
      const double scale = j.value("scale", 1.0);
      return scale == 1.0 ? f : f.scaled(scale);
    }
    throw domain_error("OrliczFunction::from_json: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw domain_error(std::string("OrliczFunction::from_json: ") + e.what());
  }
}

}  // namespace dpgap
