#pragma once

// Checkerboard weight and the one-saddle fields on (-1,1)^2.
//
// The saddle sits at the origin. The weight switches on in the vertical cones
// |x1| < |x2|. u2 jumps from -1/2 (bottom) to +1/2 (top) through transition
// wedges 2|x2| <= |x1| <= 4|x2| where a = 0, and b2 = perp-grad of v lives in
// the mirrored wedges 2|x1| <= |x2| <= 4|x1| where a = 1.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace dpgap {

struct Point2 {
  double x1 = 0.0;
  double x2 = 0.0;
};

struct Vec2 {
  double c1 = 0.0;
  double c2 = 0.0;

  double norm() const { return std::hypot(c1, c2); }
  double dot(const Vec2& o) const { return c1 * o.c1 + c2 * o.c2; }
  Vec2 operator+(const Vec2& o) const { return {c1 + o.c1, c2 + o.c2}; }
  Vec2 operator*(double s) const { return {c1 * s, c2 * s}; }
};

/// C^1 cubic smoothstep: 0 below lo, 1 above hi, max slope 1.5/(hi-lo).
/// With the default [1/4, 1/2] the slope bound is exactly 6.
struct ThetaCutoff {
  double lo = 0.25;
  double hi = 0.5;

  double value(double s) const;
  double derivative(double s) const;
  double max_slope() const { return 1.5 / (hi - lo); }
};

/// True at the saddle point, where every field below returns 0 by convention.
inline bool at_saddle(const Point2& x) { return x.x1 == 0.0 && x.x2 == 0.0; }

/// a(x) = 1 iff |x1| < |x2|. The diagonal belongs to the a = 0 phase.
int eval_weight(const Point2& x);

double eval_u2(const Point2& x, const ThetaCutoff& theta = {});
Vec2 eval_grad_u2(const Point2& x, const ThetaCutoff& theta = {});

/// v = 1/2 sgn(x1) theta(|x1|/|x2|), the stream function of b2.
double eval_v(const Point2& x, const ThetaCutoff& theta = {});

/// b2 = (-d2 v, d1 v) = div A2 (row-wise divergence).
Vec2 eval_b2(const Point2& x, const ThetaCutoff& theta = {});

/// A2 = v * [[0, -1], [1, 0]], row-major. Exposed for completeness only.
std::array<double, 4> eval_A2(const Point2& x, const ThetaCutoff& theta = {});

struct BoundaryFlux {
  double total = 0.0;
  /// Contributions of the sides x2=-1, x1=1, x2=1, x1=-1 (in that order).
  std::array<double, 4> sides{};
};

/// Integral of (b2 . nu) u2 over the boundary of the square using composite
/// two-point Gauss-Legendre with n_quad nodes per side. Panel breakpoints line
/// up with the wedge edges whenever n_quad is a multiple of 16.
BoundaryFlux boundary_flux(int n_quad, const ThetaCutoff& theta = {});

/// Max of |grad u2| * |b2| over the given points.
double disjoint_support_audit(std::span<const Point2> points, const ThetaCutoff& theta = {});

/// Same, over n_samples uniform points of the square drawn from mt19937_64(seed).
double disjoint_support_audit(std::int64_t n_samples, std::uint64_t seed,
                              const ThetaCutoff& theta = {});

struct FieldSample {
  Point2 x;
  int a = 0;
  double u2 = 0.0;
  double grad_u2_norm = 0.0;
  double b2_norm = 0.0;
};

/// Cell-centred samples on a resolution x resolution grid (never hits the origin).
std::vector<FieldSample> sample_fields(int resolution, const ThetaCutoff& theta = {});

}  // namespace dpgap
