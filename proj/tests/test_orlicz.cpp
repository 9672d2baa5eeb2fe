#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "dpgap/errors.hpp"
#include "dpgap/orlicz.hpp"

using namespace dpgap;

namespace {

// Unit field on (-1,1)^2 with total quadrature weight 4.
std::vector<FieldSampleValue> constant_field(double value, int n = 8) {
  std::vector<FieldSampleValue> out;
  const double h = 2.0 / n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.push_back({{-1 + (i + 0.5) * h, -1 + (j + 0.5) * h}, value, h * h});
  return out;
}

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("log-power evaluation") {
  CHECK(OrliczFunction::log_power(2, 0).eval(2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(OrliczFunction::log_power(2, 1).eval(0.0) == 0.0);
  // 100 log^-2(e + 10), high-precision reference.
  const double ref = 15.462989321631494120;
  CHECK(std::abs(OrliczFunction::log_power(2, -2).eval(10.0) / ref - 1.0) < 1e-12);
  // Log-space branch agrees with direct formula in the overlap.
  const auto f = OrliczFunction::log_power(2.5, 1.5);
  const double t = 3e8;
  const double direct = std::pow(t, 2.5) * std::pow(std::log(std::numbers::e + t), 1.5);
  CHECK(f.eval(t) == doctest::Approx(direct).epsilon(1e-13));
  CHECK(std::exp(f.log_ratio(std::log(t), 2.0)) == doctest::Approx(direct / (t * t)).epsilon(1e-13));
}

TEST_CASE("domain checks") {
  const auto f = OrliczFunction::log_power(2, 1);
  CHECK(error_code([&] { f.eval(-1.0); }) == "DOMAIN_ERROR");
  CHECK(error_code([&] { f.eval(NAN); }) == "DOMAIN_ERROR");
  CHECK(error_code([&] { f.eval(1e301); }) == "DOMAIN_ERROR");
  CHECK(error_code([&] { OrliczFunction::log_power(1.0, 0); }) == "DOMAIN_ERROR");
  CHECK(error_code([&] { conjugate_log_power(0.5, 1); }) == "DOMAIN_ERROR");
  CHECK(std::isfinite(f.eval(1e300)) == false);  // true value overflows double
  CHECK(f.log_ratio(std::log(1e300)) > 1380.0);
}

TEST_CASE("closed-form conjugate exponents") {
  CHECK(conjugate_log_power(2, 1) == LogPowerParams{2, -1});
  CHECK(conjugate_log_power(2, 0) == LogPowerParams{2, 0});
  CHECK(conjugate_log_power(3, 2) == LogPowerParams{1.5, -1});
}

TEST_CASE("conjugate round trip is exact") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> num(1, 400), den(1, 64);
  for (int i = 0; i < 2000; ++i) {
    // Nearest doubles of short rationals.
    const int d = den(rng);
    const double p = static_cast<double>(num(rng) + d) / d;
    const double g = static_cast<double>(num(rng) - 200) / den(rng);
    const auto back = conjugate_log_power(conjugate_log_power(p, g));
    CHECK(back.p == p);
    CHECK(back.gamma == g);
  }
  for (double p : {1.1, 1.25, 2.0, 2.5, 3.0, 4.0, 7.3}) {
    for (double g : {-3.0, -2.0, -1.5, -0.1, 0.0, 0.3, 1.0, 2.0}) {
      const auto back = conjugate_log_power(conjugate_log_power(p, g));
      CHECK(back.p == p);
      CHECK(back.gamma == g);
    }
  }
}

TEST_CASE("numeric conjugate") {
  CHECK(conjugate_numeric(OrliczFunction::pure_power(0.5, 2), 3.0) ==
        doctest::Approx(4.5).epsilon(1e-10));
  CHECK(conjugate_numeric(OrliczFunction::pure_power(1.0, 2), 2.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(conjugate_value(OrliczFunction::pure_power(1.0, 2), 2.0) == doctest::Approx(1.0));
  CHECK(conjugate_numeric(OrliczFunction::pure_power(1.0, 2), 0.0) == 0.0);

  // High-precision Legendre transforms of t^p log^g(e+t).
  struct Ref {
    double p, g, s, value;
  };
  const Ref refs[] = {
      {2, 1, 10, 14.703173814396299},        {2, 1, 1e3, 53703.224558001552},
      {2, 1, 1e6, 23304952473.994302},       {2, -1, 10, 73.141745191540392},
      {2, -1, 1e6, 3976308560879.424},       {2, 2, 1e3, 19117.167876775705},
      {2, -2, 10, 612.69725647801089},       {2, -2, 1e6, 90663910107471.948},
      {3, 2, 10, 8.7911195055612181},        {3, 2, 1e6, 80435512.66556515},
  };
  for (const auto& r : refs) {
    const double v = conjugate_numeric(OrliczFunction::log_power(r.p, r.g), r.s);
    CHECK(std::abs(v / r.value - 1.0) < 1e-8);
  }

  const auto f = OrliczFunction::log_power(2, 1);
  for (double s : {10.0, 1e3, 1e6}) {
    const double ratio = conjugate_numeric(f, s) / (0.5 * s * s / std::log(std::numbers::e + s));
    CHECK(ratio >= 0.2);
    CHECK(ratio <= 5.0);
  }
}

TEST_CASE("numeric conjugate bracket exhaustion") {
  // f' of t^1.01 stays far below 1e10 on the bracket.
  const auto f = OrliczFunction::pure_power(1.0, 1.01);
  CHECK(error_code([&] { conjugate_numeric(f, 1e10); }) == "UNBOUNDED_CONJUGATE");
}

TEST_CASE("numeric and closed-form conjugates share a growth class") {
  for (auto [p, g] : {std::pair{2.0, 1.0}, {2.0, -1.0}, {2.0, 2.0}, {2.0, -2.0}, {3.0, 2.0}}) {
    const auto f = OrliczFunction::log_power(p, g);
    const auto cc = conjugate_log_power(p, g);
    const auto fc = OrliczFunction::log_power(cc.p, cc.gamma);
    double lo = 1e300, hi = 0.0;
    for (double s : log_grid(1.0, 1e6, 61)) {
      const double r = conjugate_numeric(f, s) / fc.eval(s);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      // The ratio drifts logarithmically; doubling s moves it by under 5%
      // once the log factors have settled.
      if (s >= 1e3) {
        const double r2 = conjugate_numeric(f, 2 * s) / fc.eval(2 * s);
        CHECK(std::abs(r2 / r - 1.0) < 0.05);
      }
    }
    const double C = std::max(hi, 1.0 / lo);
    CHECK(C <= 5.0);
  }
}

TEST_CASE("young inequality") {
  const auto q = OrliczFunction::pure_power(0.5, 2);
  CHECK(young_gap(q, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(young_gap(q, 2.0, 1.0) == doctest::Approx(0.5));

  const auto f = OrliczFunction::log_power(2, -1);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1e6), lg(-6.0, 6.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    // Half uniform, half log-uniform so small arguments are covered too.
    const double t = i % 2 ? u(rng) : std::pow(10.0, lg(rng));
    const double s = i % 3 ? u(rng) : std::pow(10.0, lg(rng));
    const double fs = conjugate_numeric(f, s);
    const double gap = f.eval(t) + fs - t * s;
    const double tol = 1e-8 * (1.0 + f.eval(t) + fs);
    worst = std::min(worst, gap / tol);
    CHECK(gap >= -tol);
  }
  MESSAGE("worst scaled Young gap: " << worst);
}

TEST_CASE("conjugate sandwich") {
  const auto f = OrliczFunction::log_power(2, 1);
  for (double t : log_grid(1.0, 1e6, 49)) {
    const double fs = conjugate_numeric(f, t);
    CHECK(f.eval(fs / t) <= fs * (1 + 1e-6));
    CHECK(fs <= f.eval(2.0 * fs / t) * (1 + 1e-6));
  }
}

TEST_CASE("delta2 estimates") {
  const auto grid = log_grid(1e-6, 1e9, 301);
  CHECK(delta2_estimate(OrliczFunction::pure_power(1, 2), grid) == doctest::Approx(4.0));
  CHECK(delta2_estimate(OrliczFunction::pure_power(1, 3), grid) == doctest::Approx(8.0));
  // 4 log(e+2t)/log(e+t) peaks at about 4.9811 near t = 4.18.
  const double d = delta2_estimate(OrliczFunction::log_power(2, 1), log_grid(1.0, 1e9, 4001));
  CHECK(d > 4.98);
  CHECK(d <= 4.9812);
  CHECK(d <= delta2_bound({2, 1}, 1.0));
}

TEST_CASE("luxemburg norms") {
  CHECK(luxemburg_norm(constant_field(1.0), OrliczFunction::pure_power(1, 2)) ==
        doctest::Approx(2.0).epsilon(1e-10));
  CHECK(luxemburg_norm(constant_field(0.0), OrliczFunction::pure_power(1, 2)) == 0.0);
  // Root of 4 g^-2 log(e + 1/g) = 1.
  const double ref = 2.1520327117867646635;
  const auto f = OrliczFunction::log_power(2, 1);
  const auto field = constant_field(1.0);
  const double n = luxemburg_norm(field, f);
  CHECK(n == doctest::Approx(ref).epsilon(1e-10));
  const double m = 4.0 * f.eval(1.0 / n);
  CHECK(m <= 1.0 + 1e-6);
  CHECK(m >= 1.0 - 1e-6);
  CHECK(modular(constant_field(1.0 / n), f) == doctest::Approx(m));

  // Homogeneity of the norm.
  CHECK(luxemburg_norm(constant_field(3.0), f) == doctest::Approx(3.0 * ref).epsilon(1e-10));
  CHECK(error_code([&] {
          luxemburg_norm(constant_field(1e200), OrliczFunction::pure_power(1, 2));
        }) == "NORM_OVERFLOW");
  auto bad = constant_field(1.0);
  bad[3].weight = 0.0;
  CHECK(error_code([&] { luxemburg_norm(bad, f); }) == "DOMAIN_ERROR");
}

TEST_CASE("double-phase luxemburg norm") {
  const auto dp = DoublePhase::borderline(1.0, 1.0);
  const auto field = constant_field(1.0, 16);
  const double n = luxemburg_norm(field, dp);
  double m = 0.0;
  for (const auto& s : field) m += s.weight * dp.eval(s.x, 1.0 / n);
  CHECK(m == doctest::Approx(1.0).epsilon(1e-6));
  // Constant weight 0 reduces to phi alone.
  DoublePhase only_phi = dp;
  only_phi.weight = {Weight::Kind::Constant, 0.0};
  CHECK(luxemburg_norm(field, only_phi) == doctest::Approx(luxemburg_norm(field, dp.phi)));
}

TEST_CASE("double phase evaluation and domination") {
  const auto dp = DoublePhase::borderline(2.0, 2.0);
  const double t = 7.0;
  CHECK(dp.eval({0.1, 0.5}, t) == doctest::Approx(dp.phi.eval(t) + dp.psi.eval(t)));
  CHECK(dp.eval({0.5, 0.1}, t) == dp.phi.eval(t));
  CHECK(dp.derivative_phase(1.0, t) ==
        doctest::Approx(dp.phi.derivative(t) + dp.psi.derivative(t)));
  const auto grid = log_grid(1e-6, 1e9, 301);
  const auto c = domination_constants(dp.phi, dp.psi, grid);
  for (double s : grid) CHECK(dp.phi.eval(s) <= c.c3 * dp.psi.eval(s) + c.c4 + 1e-12);
  CHECK(dp.phi.eval(1e9) / dp.psi.eval(1e9) < 1e-3);
}

TEST_CASE("monotone and convex on log grids") {
  for (auto [p, g] : {std::pair{2.0, 0.0}, {2.0, 1.0}, {2.0, -1.0}, {2.0, -2.0}, {2.0, -3.0},
                      {2.0, -5.0}, {2.0, -10.0}, {1.5, -1.0}, {3.0, 2.0}, {1.2, -4.0}}) {
    CAPTURE(p);
    CAPTURE(g);
    const auto f = OrliczFunction::log_power(p, g);
    const auto grid = log_grid(1e-6, 1e9, 2001);
    double prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i];
      CHECK(f.eval(t) >= prev);
      prev = f.eval(t);
      CHECK(f.derivative(t) >= 0.0);
      CHECK(f.second_derivative(t) >= -1e-12 * f.derivative(t) / t);
      // Second differences on a uniform stencil.
      const double h = 0.01 * t;
      const double sd = f.eval(t + h) - 2 * f.eval(t) + f.eval(std::max(t - h, 0.0));
      CHECK(sd >= -1e-12 * f.eval(t + h));
    }
    // Growth index t f'/f in a band above one: f' t is comparable with f.
    const auto gi = growth_indices(f, log_grid(1.0, 1e9, 401));
    CHECK(gi.lower > 1.0);
    CHECK(gi.upper < p + 2.0);
  }
}

TEST_CASE("convexification substitute") {
  const auto convex = OrliczFunction::log_power(2, -2);
  CHECK(convex.convexification_knot() == 0.0);
  for (double g : {-3.0, -5.0, -10.0}) {
    CAPTURE(g);
    const auto f = OrliczFunction::log_power(2, g);
    const double t0 = f.convexification_knot();
    REQUIRE(t0 > 0.0);
    // Value and slope continuous across the knot.
    const double below = t0 * (1 - 1e-9), above = t0 * (1 + 1e-9);
    CHECK(f.eval(below) == doctest::Approx(f.eval(above)).epsilon(1e-7));
    CHECK(f.derivative(below) == doctest::Approx(f.derivative(above)).epsilon(1e-7));
    // Raw formula beyond the knot.
    const double t = 2 * t0;
    CHECK(f.eval(t) ==
          doctest::Approx(t * t * std::pow(std::log(std::numbers::e + t), g)).epsilon(1e-12));
    CHECK(f.growth_index(t0) >= 1.5 - 1e-9);
    CHECK(std::isfinite(f.derivative_over_t(0.0)));
    CHECK(f.derivative_over_t(0.0) > 0.0);
  }
}

TEST_CASE("derivatives agree with finite differences") {
  for (auto [p, g] : {std::pair{2.0, 1.0}, {2.0, -3.0}, {3.0, 2.0}, {1.5, -1.0}}) {
    const auto f = OrliczFunction::log_power(p, g, 1.7);
    for (double t : log_grid(1e-3, 1e6, 37)) {
      const double h = 1e-6 * t;
      const double d1 = (f.eval(t + h) - f.eval(t - h)) / (2 * h);
      const double d2 = (f.derivative(t + h) - f.derivative(t - h)) / (2 * h);
      CHECK(f.derivative(t) == doctest::Approx(d1).epsilon(1e-6));
      CHECK(f.second_derivative(t) == doctest::Approx(d2).epsilon(1e-5));
      CHECK(f.derivative_over_t(t) == doctest::Approx(f.derivative(t) / t).epsilon(1e-13));
    }
  }
  CHECK(OrliczFunction::log_power(2, 1).derivative_over_t(0.0) == doctest::Approx(2.0));
  CHECK(OrliczFunction::pure_power(0.5, 2).derivative_over_t(0.0) == doctest::Approx(1.0));
}

TEST_CASE("log-space access far beyond double range") {
  const auto f = OrliczFunction::log_power(2, 1);
  const double tau = 1e6;  // t = e^{1e6}
  CHECK(f.log_ratio(tau, 2.0) == doctest::Approx(std::log(tau)).epsilon(1e-12));
  const double sigma = f.log_derivative_ratio(tau);
  CHECK(f.log_inverse_derivative(sigma) == doctest::Approx(tau).epsilon(1e-14));
  for (double s : {-20.0, -1.0, 0.0, 3.0, 50.0, 1e5}) {
    const double t = f.log_inverse_derivative(s);
    CHECK(f.log_derivative_ratio(t) == doctest::Approx(s).epsilon(1e-12).scale(1.0));
  }
  CHECK(f.derivative_log_slope(tau) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("tabulated conjugate") {
  const auto f = OrliczFunction::log_power(2, 1);
  const auto fs = OrliczFunction::tabulated_conjugate(f);
  CHECK(fs.kind() == OrliczFunction::Kind::TabulatedConjugate);
  for (double s : log_grid(1e-3, 1e9, 61)) {
    CHECK(fs.eval(s) == doctest::Approx(conjugate_numeric(f, s)).epsilon(1e-7));
    // (f*)' is the inverse of f'.
    CHECK(fs.derivative(f.derivative(s)) == doctest::Approx(s).epsilon(1e-6));
  }
  // Convex, increasing.
  double prev = 0.0;
  for (double s : log_grid(1e-8, 1e30, 2001)) {
    CHECK(fs.eval(s) >= prev);
    prev = fs.eval(s);
    CHECK(fs.second_derivative(s) >= 0.0);
  }
  // Quadratic check: (t^2)* = s^2/4.
  const auto q = OrliczFunction::tabulated_conjugate(OrliczFunction::pure_power(1, 2));
  CHECK(q.eval(3.0) == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(q.derivative(3.0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("scaling") {
  const auto f = OrliczFunction::log_power(2, 1);
  const auto g = f.scaled(10.0);
  CHECK(g.eval(3.0) == doctest::Approx(10.0 * f.eval(3.0)).epsilon(1e-14));
  CHECK(g.growth_index(3.0) == doctest::Approx(f.growth_index(3.0)).epsilon(1e-14));
  const auto q = OrliczFunction::pure_power(1, 2).scaled(0.5);
  CHECK(conjugate_value(q, 3.0) == doctest::Approx(4.5));
}

TEST_CASE("json round trip") {
  for (const auto& f : {OrliczFunction::log_power(2, -1), OrliczFunction::log_power(3, 2, 0.25),
                        OrliczFunction::pure_power(0.5, 2.5),
                        OrliczFunction::tabulated_conjugate(OrliczFunction::log_power(2, 2))}) {
    const auto j = f.to_json();
    const auto back = OrliczFunction::from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.to_json() == j);
    for (double t : {0.0, 0.3, 7.0, 1e5}) CHECK(back.eval(t) == f.eval(t));
  }
  CHECK(OrliczFunction::log_power(2, -1).to_json().dump() ==
        R"({"gamma":-1.0,"kind":"log_power","p":2.0})");
  CHECK(error_code([] { OrliczFunction::from_json({{"kind", "spline"}}); }) == "DOMAIN_ERROR");
  CHECK(error_code([] { OrliczFunction::from_json({{"kind", "log_power"}}); }) == "DOMAIN_ERROR");
}

TEST_CASE("zygmund holder constant is stable") {
  HolderExponents e;
  CHECK(e.c() == 2.0);
  CHECK(e.gamma() == 0.0);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> amp(0.0, 0.5), freq(0.5, 3.0), ph(0.0, 6.3);
  std::vector<double> ratios;
  for (int trial = 0; trial < 5; ++trial) {
    const double a1 = amp(rng), f1 = freq(rng), p1 = ph(rng);
    const double a2 = amp(rng), f2 = freq(rng), p2 = ph(rng);
    auto A = constant_field(1.0, 32);
    auto B = constant_field(1.0, 32);
    for (std::size_t i = 0; i < A.size(); ++i) {
      const auto& x = A[i].x;
      A[i].value = 1.0 + a1 * std::sin(f1 * x.x1 + p1);
      B[i].value = 1.0 + a2 * std::cos(f2 * x.x2 + p2);
    }
    ratios.push_back(zygmund_holder_ratio(A, B, e));
  }
  double mean = 0.0;
  for (double r : ratios) mean += r / ratios.size();
  for (double r : ratios) CHECK(std::abs(r / mean - 1.0) <= 0.2);
  MESSAGE("holder constant estimate: " << mean);
}
