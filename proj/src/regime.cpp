#include "dpgap/regime.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dpgap/errors.hpp"

namespace dpgap {

namespace {

// 16-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGaussX = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGaussW = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// log of int_{2^k}^{2^{k+1}} f(t) t^-3 dt = int f(e^tau) e^{-2 tau} dtau.
double log_block(const OrliczFunction& f, int k) {
  const double a = k * std::numbers::ln2;
  const double half = 0.5 * std::numbers::ln2;
  const double mid = a + half;
  std::vector<double> terms;
  terms.reserve(16);
  for (std::size_t i = 0; i < kGaussX.size(); ++i) {
    for (double sign : {-1.0, 1.0}) {
      const double tau = mid + sign * half * kGaussX[i];
      terms.push_back(std::log(half * kGaussW[i]) + f.log_ratio(tau, 2.0));
    }
  }
  return log_sum_exp(terms);
}

}  // namespace

TailStatus log_power_tail(const LogPowerParams& lp) {
  if (lp.p == 2.0) return lp.gamma < -1.0 ? TailStatus::Converges : TailStatus::Diverges;
  return lp.p < 2.0 ? TailStatus::Converges : TailStatus::Diverges;
}

TailVerdict dyadic_tail_verdict(const OrliczFunction& f, std::optional<double> margin) {
  TailVerdict v;
  v.margin = margin.value_or(f.kind() == OrliczFunction::Kind::TabulatedConjugate
                                 ? kTabulatedMargin
                                 : kMargin);
  v.log_blocks.resize(kDyadicBlocks);
  for (int k = 0; k < kDyadicBlocks; ++k) {
    v.log_blocks[k] = log_block(f, k);
    if (!std::isfinite(v.log_blocks[k])) {
      throw numerical_error("EVALUATION_ERROR", "tail test: non-finite dyadic block sum");
    }
  }
  const int rows = kDyadicBlocks - kFitFirst;
  Eigen::MatrixXd A(rows, 3);
  Eigen::VectorXd y(rows);
  for (int i = 0; i < rows; ++i) {
    const int k = kFitFirst + i;
    A(i, 0) = 1.0;
    A(i, 1) = k;
    A(i, 2) = std::log(static_cast<double>(k));
    y(i) = v.log_blocks[k];
  }
  const Eigen::Vector3d coef = A.colPivHouseholderQr().solve(y);
  v.slope = coef(1);
  if (v.slope < -kSlopeTolerance) {
    v.log_exponent = coef(2);
    v.status = TailStatus::Converges;
    return v;
  }
  if (v.slope > kSlopeTolerance) {
    v.log_exponent = coef(2);
    v.status = TailStatus::Diverges;
    return v;
  }
  // k and log k are nearly collinear on [20, 60]; with the exponential trend
  // negligible, refit the pure log model so loglog corrections cannot leak into b.
  const Eigen::MatrixXd R = A(Eigen::all, std::vector<int>{0, 2});
  const Eigen::Vector2d reduced = R.colPivHouseholderQr().solve(y);
  v.log_exponent = reduced(1);
  if (v.log_exponent + 1.0 < -v.margin) {
    v.status = TailStatus::Converges;
  } else if (v.log_exponent + 1.0 > v.margin) {
    v.status = TailStatus::Diverges;
  } else {
    v.status = TailStatus::Inconclusive;
  }
  return v;
}

TailVerdict tail_integral_verdict(const OrliczFunction& f) {
  if (const auto* lp = f.log_power_params()) {
    TailVerdict v;
    v.closed_form = true;
    v.status = log_power_tail(*lp);
    v.slope = (lp->p - 2.0) * std::numbers::ln2;
    v.log_exponent = lp->gamma;
    return v;
  }
  if (const auto* pp = f.pure_power_params()) {
    TailVerdict v;
    v.closed_form = true;
    v.status = log_power_tail({pp->second, 0.0});
    v.slope = (pp->second - 2.0) * std::numbers::ln2;
    return v;
  }
  return dyadic_tail_verdict(f);
}

std::pair<Verdict, Rule> combine_tails(TailStatus phi_tail, TailStatus psi_star_tail) {
  const bool phi_div = phi_tail == TailStatus::Diverges;
  const bool psi_div = psi_star_tail == TailStatus::Diverges;
  if (phi_div && psi_div) return {Verdict::NoGap, Rule::NoGapBothTailsDiverge};
  if (psi_div) return {Verdict::NoGap, Rule::NoGapPsiStarTailDiverges};
  if (phi_div) return {Verdict::NoGap, Rule::NoGapPhiTailDiverges};
  if (phi_tail == TailStatus::Converges && psi_star_tail == TailStatus::Converges) {
    return {Verdict::Gap, Rule::GapBothTailsFinite};
  }
  return {Verdict::Inconclusive, Rule::Inconclusive};
}

OrliczFunction conjugate_descriptor(const OrliczFunction& f) {
  if (const auto* lp = f.log_power_params()) {
    const auto c = conjugate_log_power(*lp);
    return OrliczFunction::log_power(c.p, c.gamma);
  }
  if (const auto* pp = f.pure_power_params()) {
    const auto [coef, p] = *pp;
    const double q = p / (p - 1.0);
    return OrliczFunction::pure_power((p - 1.0) * coef * std::pow(coef * p, -q), q);
  }
  return OrliczFunction::tabulated_conjugate(f);
}

namespace {

void check_domination(const OrliczFunction& phi, const OrliczFunction& psi) {
  // log(phi/psi) must fall steadily along tau = log t.
  const double taus[] = {10.0, 100.0, 1e3, 1e4, 1e6};
  double prev = std::numeric_limits<double>::infinity();
  for (double tau : taus) {
    const double r = phi.log_ratio(tau) - psi.log_ratio(tau);
    if (!(r < prev)) {
      throw precondition_error("PHI_NOT_DOMINATED",
                               "classify: phi/psi does not decrease to 0 for large t");
    }
    prev = r;
  }
  if (prev > phi.log_ratio(taus[0]) - psi.log_ratio(taus[0]) - 1.0) {
    throw precondition_error("PHI_NOT_DOMINATED", "classify: phi/psi does not tend to 0");
  }
}

RegimeReport classify_unchecked(const OrliczFunction& phi, const OrliczFunction& psi,
                                bool with_dual) {
  RegimeReport rep;
  rep.phi_tail = tail_integral_verdict(phi);
  rep.psi_star_tail = tail_integral_verdict(conjugate_descriptor(psi));
  std::tie(rep.verdict, rep.rule) = combine_tails(rep.phi_tail.status, rep.psi_star_tail.status);
  if (with_dual && rep.phi_tail.status == TailStatus::Diverges) {
    // Dual integrand: phi* where a = 0, psi* where a = 1; its weaker phase is psi*.
    const RegimeReport d =
        classify_unchecked(conjugate_descriptor(psi), conjugate_descriptor(phi), false);
    DualCoherence c;
    c.dual_verdict = d.verdict;
    c.dual_rule = d.rule;
    c.coherent = d.verdict == Verdict::NoGap && d.psi_star_tail.status == TailStatus::Diverges;
    rep.dual = c;
  }
  return rep;
}

}  // namespace

RegimeReport classify(const OrliczFunction& phi, const OrliczFunction& psi) {
  check_domination(phi, psi);
  return classify_unchecked(phi, psi, true);
}

RegimeReport classify_borderline(double alpha, double beta, double p) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw domain_error("classify: alpha and beta must be finite");
  }
  return classify(OrliczFunction::log_power(p, -beta), OrliczFunction::log_power(p, alpha));
}

// ---------------------------------------------------------------------------

std::string to_string(TailStatus s) {
  switch (s) {
    case TailStatus::Converges:
      return "Converges";
    case TailStatus::Diverges:
      return "Diverges";
    default:
      return "Inconclusive";
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Gap:
      return "Gap";
    case Verdict::NoGap:
      return "NoGap";
    default:
      return "Inconclusive";
  }
}

std::string to_string(Rule r) {
  switch (r) {
    case Rule::GapBothTailsFinite:
      return "GapBothTailsFinite";
    case Rule::NoGapPsiStarTailDiverges:
      return "NoGapPsiStarTailDiverges";
    case Rule::NoGapPhiTailDiverges:
      return "NoGapPhiTailDiverges";
    case Rule::NoGapBothTailsDiverge:
      return "NoGapBothTailsDiverge";
    default:
      return "Inconclusive";
  }
}

namespace {

template <class E>
E parse_enum(const std::string& s, std::initializer_list<E> values) {
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw domain_error("unknown enumerator '" + s + "'");
}

nlohmann::json tail_json(const TailVerdict& t) {
  return {{"status", to_string(t.status)}, {"closed_form", t.closed_form},
          {"log_blocks", t.log_blocks},    {"slope", t.slope},
          {"log_exponent", t.log_exponent}, {"margin", t.margin}};
}

TailVerdict tail_from_json(const nlohmann::json& j) {
  TailVerdict t;
  t.status = parse_enum(j.at("status").get<std::string>(),
                        {TailStatus::Converges, TailStatus::Diverges, TailStatus::Inconclusive});
  t.closed_form = j.at("closed_form").get<bool>();
  t.log_blocks = j.at("log_blocks").get<std::vector<double>>();
  t.slope = j.at("slope").get<double>();
  t.log_exponent = j.at("log_exponent").get<double>();
  t.margin = j.at("margin").get<double>();
  return t;
}

constexpr auto kRules = {Rule::GapBothTailsFinite, Rule::NoGapPsiStarTailDiverges,
                         Rule::NoGapPhiTailDiverges, Rule::NoGapBothTailsDiverge,
                         Rule::Inconclusive};
constexpr auto kVerdicts = {Verdict::Gap, Verdict::NoGap, Verdict::Inconclusive};

}  // namespace

nlohmann::json RegimeReport::to_json() const {
  nlohmann::json j = {{"phi_tail", tail_json(phi_tail)},
                      {"psi_star_tail", tail_json(psi_star_tail)},
                      {"verdict", to_string(verdict)},
                      {"rule", to_string(rule)}};
  if (dual) {
    j["dual"] = {{"verdict", to_string(dual->dual_verdict)},
                 {"rule", to_string(dual->dual_rule)},
                 {"coherent", dual->coherent}};
  } else {
    j["dual"] = nullptr;
  }
  return j;
}

RegimeReport RegimeReport::from_json(const nlohmann::json& j) {
  try {
    RegimeReport r;
    r.phi_tail = tail_from_json(j.at("phi_tail"));
    r.psi_star_tail = tail_from_json(j.at("psi_star_tail"));
    r.verdict = parse_enum(j.at("verdict").get<std::string>(), kVerdicts);
    r.rule = parse_enum(j.at("rule").get<std::string>(), kRules);
    if (j.contains("dual") && !j.at("dual").is_null()) {
      const auto& d = j.at("dual");
      r.dual = DualCoherence{parse_enum(d.at("verdict").get<std::string>(), kVerdicts),
                             parse_enum(d.at("rule").get<std::string>(), kRules),
                             d.at("coherent").get<bool>()};
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw domain_error(std::string("RegimeReport::from_json: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

double Modulus::operator()(double r) const {
  if (kind == Kind::Holder) return coef * std::pow(r, exponent);
  return coef * std::pow(std::log(1.0 / r), -exponent);
}

RegularityResult regularity_modulus_check(const Modulus& omega, const OrliczFunction& phi,
                                          const OrliczFunction& psi, double k0, int d) {
  if (d < 1) throw domain_error("regularity_modulus_check: d must be >= 1");
  if (!(k0 > 0.0)) throw domain_error("regularity_modulus_check: k0 must be > 0");
  constexpr double kEpsMin = 1e-8;
  constexpr double kEpsMax = 0.25;
  constexpr int kEpsNodes = 241;
  constexpr int kTauNodes = 4001;

  // log(phi/psi) on a tau grid over [0, d log(1/eps_min)] with running minima.
  const double tau_max = d * std::log(1.0 / kEpsMin);
  auto log_ratio = [&](double tau) { return phi.log_ratio(tau) - psi.log_ratio(tau); };
  std::vector<double> prefix_min(kTauNodes);
  std::vector<double> prefix_arg(kTauNodes);
  RegularityResult out;
  out.ratio_decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kTauNodes; ++i) {
    const double tau = tau_max * i / (kTauNodes - 1);
    const double r = log_ratio(tau);
    if (r > prev + 1e-12) out.ratio_decreasing = false;
    prev = r;
    if (i == 0 || r < prefix_min[i - 1]) {
      prefix_min[i] = r;
      prefix_arg[i] = tau;
    } else {
      prefix_min[i] = prefix_min[i - 1];
      prefix_arg[i] = prefix_arg[i - 1];
    }
  }

  out.regular = true;
  double worst = 0.0;
  for (int j = 0; j < kEpsNodes; ++j) {
    const double eps =
        std::exp(std::log(kEpsMin) + (std::log(kEpsMax) - std::log(kEpsMin)) * j / (kEpsNodes - 1));
    const double tau_end = d * std::log(1.0 / eps);
    const auto i = static_cast<std::size_t>(std::floor(tau_end / tau_max * (kTauNodes - 1)));
    double m = log_ratio(tau_end);
    double arg = tau_end;
    if (prefix_min[std::min<std::size_t>(i, kTauNodes - 1)] < m) {
      m = prefix_min[std::min<std::size_t>(i, kTauNodes - 1)];
      arg = prefix_arg[std::min<std::size_t>(i, kTauNodes - 1)];
    }
    const double w = omega(eps);
    const double min_ratio = std::exp(m);
    out.required_k0 = std::max(out.required_k0, w / min_ratio);
    const double excess = w / (k0 * min_ratio);
    if (excess > 1.0) {
      out.regular = false;
      if (excess > worst) {
        worst = excess;
        out.witness = RegularityWitness{eps, std::exp(arg), w, k0 * min_ratio};
      }
    }
  }
  return out;
}

std::vector<PhaseCell> phase_diagram(std::span<const double> alphas, std::span<const double> betas,
                                     double p) {
  std::vector<PhaseCell> cells;
  cells.reserve(alphas.size() * betas.size());
  for (double a : alphas) {
    for (double b : betas) cells.push_back({a, b, classify_borderline(a, b, p)});
  }
  return cells;
}

}  // namespace dpgap
