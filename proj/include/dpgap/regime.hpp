#pragma once

// Gap / no-gap decision for a double-phase pair (phi, psi) on the checkerboard.
//
// The gap is present iff both tails
//     int_0 phi(1/r) r dr      and      int_0 psi*(1/r) r dr
// are finite. With t = 1/r both become int^inf f(t) t^-3 dt.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpgap/orlicz.hpp"

namespace dpgap {

enum class TailStatus { Converges, Diverges, Inconclusive };

struct TailVerdict {
  TailStatus status = TailStatus::Inconclusive;
  bool closed_form = false;
  /// log of int_{2^k}^{2^{k+1}} f(t) t^-3 dt for k = 0..60 (empty on the closed-form path).
  std::vector<double> log_blocks;
  /// Least-squares fit log S_k = a + b k + c log k over k in [20, 60]. When
  /// |b| <= kSlopeTolerance, c comes from the refit with b = 0 and is compared
  /// with -1.
  double slope = 0.0;
  double log_exponent = 0.0;
  double margin = 0.0;

  friend bool operator==(const TailVerdict&, const TailVerdict&) = default;
};

inline constexpr int kDyadicBlocks = 61;
inline constexpr int kFitFirst = 20;
inline constexpr double kSlopeTolerance = 0.02;
inline constexpr double kMargin = 0.05;
inline constexpr double kTabulatedMargin = 0.15;

/// Closed form for log-powers, dyadic fit otherwise.
TailVerdict tail_integral_verdict(const OrliczFunction& f);

/// Always the dyadic path; `margin` defaults by kind (0.15 for tables).
TailVerdict dyadic_tail_verdict(const OrliczFunction& f, std::optional<double> margin = {});

/// Exact rule: p = 2 converges iff gamma < -1; otherwise iff p < 2.
TailStatus log_power_tail(const LogPowerParams& lp);

enum class Verdict { Gap, NoGap, Inconclusive };

enum class Rule {
  GapBothTailsFinite,
  NoGapPsiStarTailDiverges,
  NoGapPhiTailDiverges,
  NoGapBothTailsDiverge,
  Inconclusive,
};

/// The dual pair (psi*, phi*) checked after a no-gap by phi-tail divergence:
/// its own psi*-tail is the phi tail again, so it must be no-gap by that rule.
struct DualCoherence {
  Verdict dual_verdict = Verdict::Inconclusive;
  Rule dual_rule = Rule::Inconclusive;
  bool coherent = false;

  friend bool operator==(const DualCoherence&, const DualCoherence&) = default;
};

struct RegimeReport {
  TailVerdict phi_tail;
  TailVerdict psi_star_tail;
  Verdict verdict = Verdict::Inconclusive;
  Rule rule = Rule::Inconclusive;
  std::optional<DualCoherence> dual;

  nlohmann::json to_json() const;
  static RegimeReport from_json(const nlohmann::json& j);

  friend bool operator==(const RegimeReport&, const RegimeReport&) = default;
};

std::string to_string(TailStatus s);
std::string to_string(Verdict v);
std::string to_string(Rule r);

/// Conjugate descriptor: closed form for log-powers and pure powers, tabulated otherwise.
OrliczFunction conjugate_descriptor(const OrliczFunction& f);

/// Throws PHI_NOT_DOMINATED unless phi/psi decays for large t.
RegimeReport classify(const OrliczFunction& phi, const OrliczFunction& psi);

/// Combines two tails per the gap rule.
std::pair<Verdict, Rule> combine_tails(TailStatus phi_tail, TailStatus psi_star_tail);

/// classify(t^p log^-beta, t^p log^alpha).
RegimeReport classify_borderline(double alpha, double beta, double p = 2.0);

struct PhaseCell {
  double alpha = 0.0;
  double beta = 0.0;
  RegimeReport report;
};

/// classify_borderline over the product grid, ordered by (alpha, beta).
std::vector<PhaseCell> phase_diagram(std::span<const double> alphas, std::span<const double> betas,
                                     double p = 2.0);

// Modulus-of-continuity criterion: omega(eps) <= k0 min_{1<=t<=eps^-d} phi/psi.

struct Modulus {
  enum class Kind { LogInverse, Holder };
  Kind kind = Kind::LogInverse;
  double coef = 1.0;
  double exponent = 1.0;

  /// coef log^-exponent(1/r) or coef r^exponent, for 0 < r < 1.
  double operator()(double r) const;
};

struct RegularityWitness {
  double eps = 0.0;
  double t = 0.0;
  double omega = 0.0;
  double bound = 0.0;  ///< k0 phi(t)/psi(t)
};

struct RegularityResult {
  bool regular = false;
  std::optional<RegularityWitness> witness;
  /// Smallest k0 that would pass on the same grid.
  double required_k0 = 0.0;
  /// phi/psi observed nonincreasing on [1, eps_min^-d], so the min sits at eps^-d.
  bool ratio_decreasing = false;
};

RegularityResult regularity_modulus_check(const Modulus& omega, const OrliczFunction& phi,
                                          const OrliczFunction& psi, double k0, int d);

}  // namespace dpgap
