#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dpgap/geometry.hpp"

using namespace dpgap;

namespace {

// Central differences, step 1e-6.
Vec2 fd_gradient(double (*f)(const Point2&, const ThetaCutoff&), const Point2& x) {
  const double h = 1e-6;
  const ThetaCutoff th;
  return {(f({x.x1 + h, x.x2}, th) - f({x.x1 - h, x.x2}, th)) / (2 * h),
          (f({x.x1, x.x2 + h}, th) - f({x.x1, x.x2 - h}, th)) / (2 * h)};
}

}  // namespace

TEST_CASE("theta cutoff profile") {
  const ThetaCutoff th;
  CHECK(th.value(0.1) == 0.0);
  CHECK(th.value(0.25) == 0.0);
  CHECK(th.value(0.5) == 1.0);
  CHECK(th.value(3.0) == 1.0);
  CHECK(th.max_slope() == 6.0);
  double prev = 0.0, max_slope = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double s = 0.2 + 0.35 * i / 10000.0;
    CHECK(th.value(s) >= prev);
    prev = th.value(s);
    max_slope = std::max(max_slope, th.derivative(s));
  }
  CHECK(max_slope <= 6.0);
  CHECK(max_slope == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("weight and tie rule") {
  CHECK(eval_weight({0.5, 0.1}) == 0);
  CHECK(eval_weight({0.1, 0.5}) == 1);
  CHECK(eval_weight({0.3, 0.3}) == 0);
  CHECK(eval_weight({-0.3, 0.3}) == 0);
}

TEST_CASE("u2 values") {
  CHECK(eval_u2({0.0, 0.5}) == 0.5);
  CHECK(eval_u2({0.5, -0.5}) == -0.5);
  CHECK(eval_u2({0.5, 0.1}) == 0.0);
  CHECK(eval_u2({0.0, 0.0}) == 0.0);
  CHECK(eval_grad_u2({0.0, 0.5}).norm() == 0.0);
  CHECK(eval_grad_u2({0.9, 0.2}).norm() == 0.0);  // |x1| > 4|x2|
}

TEST_CASE("u2 gradient matches closed form and finite differences") {
  const ThetaCutoff th;
  const Point2 x{0.9, 0.3};
  const double d = th.derivative(1.0 / 3.0);
  const Vec2 expected{-d * (0.3 / 0.81) / 2.0, d / (2.0 * 0.9)};
  const Vec2 g = eval_grad_u2(x);
  CHECK(g.c1 == doctest::Approx(expected.c1).epsilon(1e-14));
  CHECK(g.c2 == doctest::Approx(expected.c2).epsilon(1e-14));
  const Vec2 fd = fd_gradient(&eval_u2, x);
  CHECK(fd.c1 == doctest::Approx(g.c1).epsilon(1e-6));
  CHECK(fd.c2 == doctest::Approx(g.c2).epsilon(1e-6));
}

TEST_CASE("b2 is the perpendicular gradient of v") {
  const Point2 x{0.3, 0.9};
  const Vec2 dv = fd_gradient(&eval_v, x);
  const Vec2 b = eval_b2(x);
  CHECK(b.norm() > 0.0);
  CHECK(b.c1 == doctest::Approx(-dv.c2).epsilon(1e-6));
  CHECK(b.c2 == doctest::Approx(dv.c1).epsilon(1e-6));
  CHECK(eval_b2({0.5, 0.1}).norm() == 0.0);

  const auto A = eval_A2(x);
  CHECK(A[0] == 0.0);
  CHECK(A[1] == -eval_v(x));
  CHECK(A[2] == eval_v(x));
}

TEST_CASE("b2 reflection pattern") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Point2 x{c(rng), c(rng)};
    const Vec2 b = eval_b2(x);
    const Vec2 r1 = eval_b2({-x.x1, x.x2});
    const Vec2 r2 = eval_b2({x.x1, -x.x2});
    CHECK(r1.c1 == doctest::Approx(-b.c1));
    CHECK(r1.c2 == doctest::Approx(b.c2));
    CHECK(r2.c1 == doctest::Approx(-b.c1));
    CHECK(r2.c2 == doctest::Approx(b.c2));
  }
}

TEST_CASE("symmetry, bounds and support inclusions") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const Point2 x{c(rng), c(rng)};
    const double u = eval_u2(x);
    REQUIRE(std::abs(u) <= 0.5);
    CHECK(eval_u2({x.x1, -x.x2}) == -u);
    CHECK(eval_u2({-x.x1, x.x2}) == u);
    const Vec2 g = eval_grad_u2(x);
    const Vec2 b = eval_b2(x);
    if (g.norm() > 0.0) {
      CHECK(eval_weight(x) == 0);
      CHECK(2 * std::abs(x.x2) <= std::abs(x.x1));
      CHECK(std::abs(x.x1) <= 4 * std::abs(x.x2));
      CHECK(g.norm() * std::abs(x.x1) <= 6.0 * std::sqrt(2.0));
    }
    if (b.norm() > 0.0) {
      CHECK(eval_weight(x) == 1);
      CHECK(2 * std::abs(x.x1) <= std::abs(x.x2));
      CHECK(std::abs(x.x2) <= 4 * std::abs(x.x1));
      CHECK(b.norm() * std::abs(x.x1) <= 6.0 * std::sqrt(2.0));
    }
  }
}

TEST_CASE("boundary flux converges to one") {
  CHECK(std::abs(boundary_flux(1024).total - 1.0) < 1e-6);
  CHECK(std::abs(boundary_flux(8192).total - 1.0) < 1e-9);
  // Aligned panels make the rule exact; misaligned ones converge monotonically.
  CHECK(std::abs(boundary_flux(128).total - 1.0) < 1e-13);
  CHECK(std::abs(boundary_flux(256).total - 1.0) < 1e-13);
  double prev = 1.0;
  for (int n : {66, 130, 258, 514}) {
    const double err = std::abs(boundary_flux(n).total - 1.0);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("boundary flux per side") {
  // Only the top and bottom sides cross the support of b2.
  const BoundaryFlux f = boundary_flux(1024);
  CHECK(f.sides[1] == 0.0);
  CHECK(f.sides[3] == 0.0);
  CHECK(f.sides[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(f.sides[2] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("disjoint supports") {
  CHECK(disjoint_support_audit(1'000'000, 1) == 0.0);
  CHECK(disjoint_support_audit(100'000, 12345) == 0.0);
  std::vector<Point2> cone, diagonal;
  for (int i = 1; i <= 1000; ++i) {
    const double x2 = i / 1001.0 * 0.25;
    const double x1 = x2 * (2.0 + 2.0 * i / 1001.0);
    cone.push_back({x1, x2});
    diagonal.push_back({x2, -x2});
  }
  for (const Point2& x : cone) CHECK(eval_b2(x).norm() == 0.0);
  for (const Point2& x : diagonal) {
    CHECK(eval_b2(x).norm() == 0.0);
    CHECK(eval_grad_u2(x).norm() == 0.0);
  }
  CHECK(disjoint_support_audit(std::span<const Point2>(cone)) == 0.0);
}

TEST_CASE("solenoidality against smooth bumps") {
  // int b2 . grad(phi) = 0 for compactly supported phi. The integrand lives in
  // the four wedges; integrate in polar coordinates with Gauss-Legendre.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(-0.5, 0.5), rad(0.2, 0.45);
  const double g[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                       0.9061798459386640};
  const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                       0.4786286704993665, 0.2369268850561891};
  for (int trial = 0; trial < 1000; ++trial) {
    const double cx = c(rng), cy = c(rng), R = rad(rng);
    // grad of (1 - q)^4, q = |x - c|^2 / R^2
    auto grad_bump = [&](const Point2& x) -> Vec2 {
      const double dx = x.x1 - cx, dy = x.x2 - cy;
      const double q = (dx * dx + dy * dy) / (R * R);
      if (q >= 1.0) return {};
      const double f = -8.0 * (1.0 - q) * (1.0 - q) * (1.0 - q) / (R * R);
      return {f * dx, f * dy};
    };
    double total = 0.0, scale = 0.0;
    // Wedge 2|x1| <= |x2| <= 4|x1|, one copy per quadrant.
    const double lo = std::atan(2.0), hi = std::atan(4.0);
    const int nr = 64, na = 16;
    for (int quad = 0; quad < 4; ++quad) {
      const double sx = (quad & 1) ? -1.0 : 1.0, sy = (quad & 2) ? -1.0 : 1.0;
      for (int ia = 0; ia < na; ++ia) {
        for (int ka = 0; ka < 5; ++ka) {
          const double ha = (hi - lo) / na;
          const double phi = lo + (ia + 0.5) * ha + 0.5 * ha * g[ka];
          for (int ir = 0; ir < nr; ++ir) {
            for (int kr = 0; kr < 5; ++kr) {
              const double hr = 1.5 / nr;
              const double r = (ir + 0.5) * hr + 0.5 * hr * g[kr];
              const Point2 x{sx * r * std::cos(phi), sy * r * std::sin(phi)};
              const double wt = 0.25 * ha * hr * w[ka] * w[kr] * r;
              const double term = eval_b2(x).dot(grad_bump(x));
              total += wt * term;
              scale += wt * std::abs(term);
            }
          }
        }
      }
    }
    CHECK(std::abs(total) <= 1e-6 * std::max(1.0, scale));
  }
}

TEST_CASE("field sampler") {
  const auto s = sample_fields(16);
  REQUIRE(s.size() == 256u);
  for (const auto& f : s) {
    CHECK(!at_saddle(f.x));
    CHECK(f.grad_u2_norm * f.b2_norm == 0.0);
  }
}
