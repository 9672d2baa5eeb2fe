#include "dpgap/cutoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "dpgap/errors.hpp"
#include "dpgap/regime.hpp"

namespace dpgap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Composite Gauss panels in z for the normalization integral.
constexpr double kPanelWidth = 0.25;
constexpr int kMinPanels = 64;
constexpr int kMaxExpansions = 400;

using Gauss8 = boost::math::quadrature::gauss<double, 8>;
using Kronrod15 = boost::math::quadrature::gauss_kronrod<double, 15>;

// log eta'(r) = A + B u + C(u, z) with u = log(1/r) = e^z. Only C is evaluated
// pointwise, so nothing of size u is ever subtracted from another such term.
struct LogSlope {
  const OrliczFunction* psi = nullptr;  // null for the log-log cutoff
  double q = 2.0;
  double log_c = 0.0;
  double A = 0.0;
  double B = 1.0;

  static LogSlope harmonic(const OrliczFunction& psi, double log_c) {
    LogSlope s;
    s.psi = &psi;
    s.q = psi.leading_exponent();
    s.log_c = log_c;
    s.A = log_c / (s.q - 1.0);
    s.B = 1.0 / (s.q - 1.0);
    return s;
  }
  static LogSlope loglog(double L) {
    LogSlope s;
    s.A = -std::log(L - std::log(L));
    return s;
  }

  double C(double u, double z) const {
    return psi ? psi->log_inverse_derivative_offset(log_c + u) : -z;
  }
  double tau(double u, double z) const { return A + B * u + C(u, z); }
  // log of eta'(rho) d rho / dz; rho = e^-u, d rho = -rho u dz.
  double log_density(double z) const {
    const double u = std::exp(z);
    return A + C(u, z) + (B - 1.0) * u + z;
  }
  // log of f(eta') rho^2 u, the energy density per dz before the 2 pi.
  double log_energy_density(const OrliczFunction& f, double z) const {
    const double u = std::exp(z);
    const double c = C(u, z);
    const double qf = f.leading_exponent();
    return f.log_ratio(A + B * u + c, qf) + qf * (A + c) + (qf * B - 2.0) * u + z;
  }
};

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log int_{a}^{b} exp(g(z)) dz by 8-point Gauss, shifted by g at the centre.
template <class G>
double log_gauss(G&& g, double a, double b) {
  const double shift = g(0.5 * (a + b));
  const double v = Gauss8::integrate([&](double z) { return std::exp(g(z) - shift); }, a, b);
  return shift + std::log(v);
}

double z_of(double log_r) { return std::log(-log_r); }

void check_radii(double log_r1, double log_r2, const char* where) {
  if (!(std::isfinite(log_r1) && std::isfinite(log_r2) && log_r1 < log_r2 &&
        log_r2 <= -std::numbers::ln2)) {
    throw domain_error(std::string(where) + ": requires 0 < r1 < r2 <= 1/2");
  }
}

double log_integral(const LogSlope& s, double log_r1, double log_r2) {
  const double z_hi = z_of(log_r1);
  const double z_lo = z_of(log_r2);
  const int panels = std::max(kMinPanels, static_cast<int>(std::ceil((z_hi - z_lo) / kPanelWidth)));
  const double h = (z_hi - z_lo) / panels;
  double total = -kInf;
  for (int k = 0; k < panels; ++k) {
    const double a = z_lo + k * h;
    const double b = k + 1 == panels ? z_hi : a + h;
    total = log_add(total, log_gauss([&](double z) { return s.log_density(z); }, a, b));
  }
  return total;
}

double profile_eta_between(const LogSlope& s, double z_from, double z_to) {
  if (z_to <= z_from) return 0.0;
  return std::exp(log_gauss([&](double z) { return s.log_density(z); }, z_from, z_to));
}

LogSlope slope_of(const RadialCutoff& cut) {
  if (cut.kind == RadialCutoff::Kind::PsiHarmonic) {
    return LogSlope::harmonic(*cut.psi, std::log(cut.c));
  }
  return LogSlope::loglog(-cut.log_r2);
}

// Node z values, decreasing from z1 (r1) to z2 (r2).
std::vector<double> node_z(double log_r1, double log_r2) {
  const double z1 = z_of(log_r1), z2 = z_of(log_r2);
  std::vector<double> z(RadialCutoff::kProfileNodes);
  for (int j = 0; j < RadialCutoff::kProfileNodes; ++j) {
    z[j] = z1 - (z1 - z2) * j / (RadialCutoff::kProfileNodes - 1);
  }
  z.back() = z2;
  return z;
}

}  // namespace

// ---------------------------------------------------------------------------

double RadialCutoff::r1() const { return std::exp(log_r1); }
double RadialCutoff::r2() const { return std::exp(log_r2); }

double RadialCutoff::eta(double r) const {
  if (!(r >= 0.0)) throw domain_error("eta: radius must be >= 0");
  if (r == 0.0) return 0.0;
  return eta_log(std::log(r));
}

double RadialCutoff::eta_log(double log_r) const {
  if (log_r <= log_r1) return 0.0;
  if (log_r >= log_r2) return 1.0;
  const double z = z_of(log_r);
  if (kind == Kind::LogLog) {
    const double L = -log_r2;
    return std::clamp((L - z) / (L - std::log(L)), 0.0, 1.0);
  }
  const double z1 = z_of(log_r1), z2 = z_of(log_r2);
  const double step = (z1 - z2) / (kProfileNodes - 1);
  auto j = static_cast<std::size_t>(std::clamp((z1 - z) / step, 0.0, kProfileNodes - 2.0));
  while (j > 0 && z_of(profile[j].log_r) < z) --j;
  while (j + 2 < profile.size() && z_of(profile[j + 1].log_r) > z) ++j;
  const LogSlope s = slope_of(*this);
  return std::clamp(profile[j].eta + profile_eta_between(s, z, z_of(profile[j].log_r)), 0.0, 1.0);
}

double RadialCutoff::log_deta(double log_r) const {
  if (log_r <= log_r1 || log_r >= log_r2) return -kInf;
  const double z = z_of(log_r);
  return slope_of(*this).tau(-log_r, z);
}

// ---------------------------------------------------------------------------

double log_normalization_integral(const OrliczFunction& psi, double log_r1, double log_r2,
                                  double log_c) {
  check_radii(log_r1, log_r2, "normalization integral");
  return log_integral(LogSlope::harmonic(psi, log_c), log_r1, log_r2);
}

double solve_normalization_constant(const OrliczFunction& psi, double r1, double r2) {
  if (!(r1 > 0.0)) throw domain_error("solve_normalization_constant: requires r1 > 0");
  return solve_normalization_constant_log(psi, std::log(r1), std::log(r2));
}

double solve_normalization_constant_log(const OrliczFunction& psi, double log_r1,
                                        double log_r2) {
  check_radii(log_r1, log_r2, "solve_normalization_constant");
  // log I is increasing in x = log c.
  auto F = [&](double x) { return log_integral(LogSlope::harmonic(psi, x), log_r1, log_r2); };
  double lo = -1.0, hi = 1.0;
  double f_lo = F(lo), f_hi = F(hi);
  double width = 1.0;
  int expansions = 0;
  while (f_lo > 0.0) {
    if (++expansions > kMaxExpansions) {
      throw numerical_error("NORMALIZATION_INFEASIBLE", "no lower bracket for c");
    }
    hi = lo;
    f_hi = f_lo;
    width *= 2.0;
    lo = hi - width;
    f_lo = F(lo);
  }
  while (f_hi < 0.0) {
    if (++expansions > kMaxExpansions) {
      throw numerical_error("NORMALIZATION_INFEASIBLE", "no upper bracket for c");
    }
    lo = hi;
    f_lo = f_hi;
    width *= 2.0;
    hi = lo + width;
    f_hi = F(hi);
  }
  if (!std::isfinite(f_lo) || !std::isfinite(f_hi)) {
    throw numerical_error("NORMALIZATION_INFEASIBLE", "normalization integral not finite");
  }
  double x = lo;
  if (f_lo != 0.0) {
    x = hi;
    if (f_hi != 0.0) {
      std::uintmax_t iters = 200;
      const auto [a, b] = boost::math::tools::toms748_solve(
          F, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(50), iters);
      x = std::abs(F(a)) <= std::abs(F(b)) ? a : b;
    }
  }
  if (!(std::abs(F(x)) <= 1e-8)) {
    throw numerical_error("NORMALIZATION_INFEASIBLE", "normalization residual above 1e-8");
  }
  return std::exp(x);
}

RadialCutoff build_psi_harmonic_cutoff(const OrliczFunction& psi, double r1, double r2) {
  if (!(r1 > 0.0)) throw domain_error("build_psi_harmonic_cutoff: requires r1 > 0");
  return build_psi_harmonic_cutoff_log(psi, std::log(r1), std::log(r2));
}

RadialCutoff build_psi_harmonic_cutoff_log(const OrliczFunction& psi, double log_r1,
                                           double log_r2) {
  RadialCutoff cut;
  cut.kind = RadialCutoff::Kind::PsiHarmonic;
  cut.log_r1 = log_r1;
  cut.log_r2 = log_r2;
  cut.c = solve_normalization_constant_log(psi, log_r1, log_r2);
  cut.psi = psi;
  const LogSlope s = LogSlope::harmonic(*cut.psi, std::log(cut.c));
  const auto z = node_z(log_r1, log_r2);
  cut.profile.resize(z.size());
  double eta = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (j > 0) eta += profile_eta_between(s, z[j], z[j - 1]);
    const double u = std::exp(z[j]);
    cut.profile[j] = {-u, eta, s.tau(u, z[j])};
  }
  cut.profile.front().log_r = log_r1;
  cut.profile.back().log_r = log_r2;
  cut.normalization_error = std::abs(eta - 1.0);
  for (auto& node : cut.profile) node.eta = std::min(node.eta, 1.0);
  cut.profile.back().eta = 1.0;
  return cut;
}

double find_inner_log_radius(const OrliczFunction& psi, double r2, double delta) {
  if (!(r2 > 0.0 && r2 <= 0.5)) throw domain_error("find_inner_radius: requires 0 < r2 <= 1/2");
  if (!(delta > 0.0 && std::isfinite(delta))) {
    throw domain_error("find_inner_radius: requires delta > 0");
  }
  if (tail_integral_verdict(conjugate_descriptor(psi)).status != TailStatus::Diverges) {
    throw precondition_error("NO_REMOVABLE_SINGULARITY",
                             "psi* tail converges: no cutoff with vanishing psi-energy exists");
  }
  const double u2 = -std::log(r2);
  const double log_delta = std::log(delta);
  // c(r1) <= delta iff I(delta) >= 1; w = log log(r2 / r1), I increasing in w.
  auto log_r1_of = [&](double w) { return -(u2 + std::exp(w)); };
  auto ok = [&](double w) {
    return log_normalization_integral(psi, log_r1_of(w), -u2, log_delta) >= 0.0;
  };
  constexpr double kMaxW = 690.0;  // log r1 stays above -1e300
  double fail = -40.0, pass = 0.0;
  if (ok(pass)) {
    double step = 1.0;
    fail = pass - step;
    while (ok(fail)) {
      pass = fail;
      step *= 2.0;
      fail = pass - step;
      if (fail < -40.0) return log_r1_of(pass);
    }
  } else {
    double step = 1.0;
    fail = pass;
    pass = fail + step;
    while (!ok(pass)) {
      fail = pass;
      step *= 2.0;
      if (fail >= kMaxW) {
        throw numerical_error("NORMALIZATION_INFEASIBLE", "inner radius below the log-double range");
      }
      pass = std::min(fail + step, kMaxW);
    }
  }
  for (int it = 0; it < 200 && pass - fail > 1e-12 * std::max(1.0, std::abs(pass)); ++it) {
    const double mid = 0.5 * (fail + pass);
    (ok(mid) ? pass : fail) = mid;
  }
  return log_r1_of(pass);
}

double find_inner_radius(const OrliczFunction& psi, double r2, double delta) {
  return std::exp(find_inner_log_radius(psi, r2, delta));
}

RadialCutoff build_loglog_cutoff(double eps) {
  if (!(eps > 0.0 && eps < 0.1)) throw domain_error("build_loglog_cutoff: requires 0 < eps < 1/10");
  return build_loglog_cutoff_log(std::log(eps));
}

RadialCutoff build_loglog_cutoff_log(double log_eps) {
  if (!(log_eps < -std::log(10.0) && log_eps > -690.0)) {
    throw domain_error("build_loglog_cutoff: requires exp(-690) < eps < 1/10");
  }
  RadialCutoff cut;
  cut.kind = RadialCutoff::Kind::LogLog;
  cut.eps = std::exp(log_eps);
  cut.log_r2 = log_eps;
  cut.log_r1 = -std::exp(-log_eps);
  const double L = -log_eps;
  const double D = L - std::log(L);
  const auto z = node_z(cut.log_r1, cut.log_r2);
  cut.profile.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double u = std::exp(z[j]);
    cut.profile[j] = {-u, std::clamp((L - z[j]) / D, 0.0, 1.0), u - z[j] - std::log(D)};
  }
  cut.profile.front() = {cut.log_r1, 0.0, cut.profile.front().log_deta};
  cut.profile.back() = {cut.log_r2, 1.0, cut.profile.back().log_deta};
  return cut;
}

namespace {

template <class LogDensity>
double radial_energy(const RadialCutoff& cut, LogDensity&& g) {
  const double z_hi = z_of(cut.log_r1), z_lo = z_of(cut.log_r2);
  const int panels = std::max(16, static_cast<int>(std::ceil(z_hi - z_lo)));
  const double h = (z_hi - z_lo) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double a = z_lo + k * h;
    const double b = k + 1 == panels ? z_hi : a + h;
    total += Kronrod15::integrate([&](double z) { return std::exp(g(z)); }, a, b, 12, 1e-12);
  }
  const double energy = kTwoPi * total;
  if (!std::isfinite(energy)) throw numerical_error("ENERGY_OVERFLOW", "cutoff energy not finite");
  return energy;
}

}  // namespace

double cutoff_energy(const RadialCutoff& cutoff, const OrliczFunction& f) {
  const LogSlope s = slope_of(cutoff);
  return radial_energy(cutoff, [&](double z) { return s.log_energy_density(f, z); });
}

double cutoff_energy(const RadialCutoff& cutoff, const DoublePhase& f) {
  // 1/2 phi + 1/2 (phi + psi) = phi + psi / 2.
  const LogSlope s = slope_of(cutoff);
  return radial_energy(cutoff, [&](double z) {
    return log_add(s.log_energy_density(f.phi, z),
                   s.log_energy_density(f.psi, z) - std::numbers::ln2);
  });
}

double psi_harmonic_residual(const RadialCutoff& cutoff) {
  if (cutoff.kind != RadialCutoff::Kind::PsiHarmonic) {
    throw domain_error("psi_harmonic_residual: requires a psi-harmonic cutoff");
  }
  const OrliczFunction& psi = *cutoff.psi;
  const LogSlope s = LogSlope::harmonic(psi, std::log(cutoff.c));
  const double q = s.q;
  // log(r psi'(eta') / c), with the u terms grouped so they cancel exactly when q = 2.
  std::vector<double> lq(cutoff.profile.size());
  for (std::size_t j = 0; j < lq.size(); ++j) {
    const double u = -cutoff.profile[j].log_r;
    const double c = s.C(u, std::log(u));
    lq[j] = (q - 1.0) * (s.A + c) - s.log_c + ((q - 1.0) * s.B - 1.0) * u +
            psi.log_derivative_ratio(s.tau(u, std::log(u)), q - 1.0);
  }
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < lq.size(); ++j) {
    const double du = cutoff.profile[j + 1].log_r - cutoff.profile[j - 1].log_r;
    worst = std::max(worst, std::abs((lq[j + 1] - lq[j - 1]) / du));
  }
  return worst;
}

EnergyCertificate energy_certificate(const RadialCutoff& cutoff) {
  if (cutoff.kind != RadialCutoff::Kind::PsiHarmonic) {
    throw domain_error("energy_certificate: requires a psi-harmonic cutoff");
  }
  const OrliczFunction& psi = *cutoff.psi;
  const double q = psi.leading_exponent();
  double least_index = kInf;
  for (const auto& node : cutoff.profile) {
    const double tau = node.log_deta;
    least_index = std::min(
        least_index, std::exp(psi.log_derivative_ratio(tau, q - 1.0) - psi.log_ratio(tau, q)));
  }
  EnergyCertificate cert;
  cert.energy = cutoff_energy(cutoff, psi);
  cert.c = cutoff.c;
  cert.K = kTwoPi / least_index;
  cert.bound = cert.K * cert.c;
  // Equality is attained for psi = t^2; allow rounding.
  cert.holds = cert.energy <= cert.bound * (1.0 + 1e-9);
  cert.harmonic_residual = psi_harmonic_residual(cutoff);
  cert.normalization_error = cutoff.normalization_error;
  return cert;
}

nlohmann::json EnergyCertificate::to_json() const {
  return {{"energy", energy},
          {"c", c},
          {"K", K},
          {"bound", bound},
          {"holds", holds},
          {"harmonic_residual", harmonic_residual},
          {"normalization_error", normalization_error}};
}

EnergyCertificate EnergyCertificate::from_json(const nlohmann::json& j) {
  EnergyCertificate c;
  c.energy = j.at("energy").get<double>();
  c.c = j.at("c").get<double>();
  c.K = j.at("K").get<double>();
  c.bound = j.at("bound").get<double>();
  c.holds = j.at("holds").get<bool>();
  c.harmonic_residual = j.at("harmonic_residual").get<double>();
  c.normalization_error = j.at("normalization_error").get<double>();
  return c;
}

}  // namespace dpgap
