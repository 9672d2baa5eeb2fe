#pragma once

// Radial cutoffs that remove the point singularity at the origin.
//
// Radii can be far below the double range (r1 = exp(-1e100) is routine for
// borderline psi), so every radius is carried as log r and profiles are
// integrated in z = log log(1/r).

#include <optional>
#include <vector>

#include "json.hpp"

#include "dpgap/orlicz.hpp"

namespace dpgap {

struct ProfileNode {
  double log_r = 0.0;
  double eta = 0.0;
  double log_deta = 0.0;  ///< log eta'(r)
};

struct RadialCutoff {
  enum class Kind { LogLog, PsiHarmonic };
  static constexpr int kProfileNodes = 4096;

  Kind kind = Kind::LogLog;
  double log_r1 = 0.0;
  double log_r2 = 0.0;
  double c = 0.0;    ///< normalization constant, PsiHarmonic only
  double eps = 0.0;  ///< LogLog only
  std::optional<OrliczFunction> psi;
  /// Ordered by increasing r; front is r1 (eta = 0), back is r2 (eta = 1).
  std::vector<ProfileNode> profile;
  /// |eta(r2) - 1| before clamping.
  double normalization_error = 0.0;

  double r1() const;
  double r2() const;
  /// eta at radius exp(log_r); 0 below r1 and 1 above r2.
  double eta_log(double log_r) const;
  double eta(double r) const;
  /// log eta'(r) on (r1, r2), -inf outside.
  double log_deta(double log_r) const;
};

/// log of int_{r1}^{r2} (psi*)'(c / rho) d rho, for log radii and log c.
double log_normalization_integral(const OrliczFunction& psi, double log_r1, double log_r2,
                                  double log_c);

/// The c > 0 with int_{r1}^{r2} (psi*)'(c / rho) d rho = 1. Requires
/// 0 < r1 < r2 <= 1/2. NORMALIZATION_INFEASIBLE after 400 bracket expansions.
double solve_normalization_constant(const OrliczFunction& psi, double r1, double r2);
double solve_normalization_constant_log(const OrliczFunction& psi, double log_r1, double log_r2);

/// eta' = (psi*)'(c / r) on (r1, r2), which makes r psi'(eta') constant.
RadialCutoff build_psi_harmonic_cutoff(const OrliczFunction& psi, double r1, double r2);
RadialCutoff build_psi_harmonic_cutoff_log(const OrliczFunction& psi, double log_r1,
                                           double log_r2);

/// log r1 with c(r1, r2) <= delta, tight to about 1e-12 in log log(r2 / r1).
/// NO_REMOVABLE_SINGULARITY when the psi* tail converges (the gap regime).
double find_inner_log_radius(const OrliczFunction& psi, double r2, double delta);
/// exp of the above; underflows to 0 for borderline psi and small delta.
double find_inner_radius(const OrliczFunction& psi, double r2, double delta);

/// eta = (log(1/eps) - log log(1/r)) / (log(1/eps) - log log(1/eps)) between
/// r1 = exp(-1/eps) and r2 = eps. Requires 0 < eps < 1/10.
RadialCutoff build_loglog_cutoff(double eps);
/// Same with eps = exp(log_eps), for eps below the double range.
RadialCutoff build_loglog_cutoff_log(double log_eps);

/// 2 pi int f(eta'(r)) r dr. ENERGY_OVERFLOW on a non-finite result.
double cutoff_energy(const RadialCutoff& cutoff, const OrliczFunction& f);
/// The weight takes each value on half of every circle, so the energy is
/// 1/2 (phi energy) + 1/2 (phi + psi energy).
double cutoff_energy(const RadialCutoff& cutoff, const DoublePhase& f);

/// 2 pi, the bound on K below: psi's growth index never drops under 1.
inline constexpr double kCutoffEnergyConstant = 6.283185307179586;

struct EnergyCertificate {
  double energy = 0.0;
  double c = 0.0;
  /// 2 pi / (least growth index of psi over the profile's eta' values).
  double K = 0.0;
  double bound = 0.0;  ///< K c
  bool holds = false;  ///< energy <= bound (1 + 1e-9)
  /// max over interior nodes of |d (r psi'(eta')) / d log r| / c.
  double harmonic_residual = 0.0;
  double normalization_error = 0.0;

  nlohmann::json to_json() const;
  static EnergyCertificate from_json(const nlohmann::json& j);
  friend bool operator==(const EnergyCertificate&, const EnergyCertificate&) = default;
};

/// Requires a PsiHarmonic cutoff; the energy is taken with psi itself.
EnergyCertificate energy_certificate(const RadialCutoff& cutoff);

/// The residual alone, as stored in the certificate.
double psi_harmonic_residual(const RadialCutoff& cutoff);

}  // namespace dpgap
