#include "dpgap/geometry.hpp"

#include <algorithm>
#include <random>

#include "dpgap/errors.hpp"

namespace dpgap {

double ThetaCutoff::value(double s) const {
  if (s <= lo) return 0.0;
  if (s >= hi) return 1.0;
  const double u = (s - lo) / (hi - lo);
  return u * u * (3.0 - 2.0 * u);
}

double ThetaCutoff::derivative(double s) const {
  if (s <= lo || s >= hi) return 0.0;
  const double u = (s - lo) / (hi - lo);
  return 6.0 * u * (1.0 - u) / (hi - lo);
}

namespace {

double sgn(double t) { return (t > 0.0) - (t < 0.0); }

}  // namespace

int eval_weight(const Point2& x) { return std::abs(x.x1) < std::abs(x.x2) ? 1 : 0; }

double eval_u2(const Point2& x, const ThetaCutoff& theta) {
  if (at_saddle(x)) return 0.0;
  if (x.x1 == 0.0) return 0.5 * sgn(x.x2);
  return 0.5 * sgn(x.x2) * theta.value(std::abs(x.x2) / std::abs(x.x1));
}

Vec2 eval_grad_u2(const Point2& x, const ThetaCutoff& theta) {
  if (at_saddle(x) || x.x1 == 0.0 || x.x2 == 0.0) return {};
  const double a1 = std::abs(x.x1);
  const double a2 = std::abs(x.x2);
  const double dtheta = theta.derivative(a2 / a1);
  if (dtheta == 0.0) return {};
  // u2 = 1/2 sgn(x2) theta(|x2|/|x1|)
  return {-0.5 * sgn(x.x2) * sgn(x.x1) * dtheta * a2 / (a1 * a1), 0.5 * dtheta / a1};
}

double eval_v(const Point2& x, const ThetaCutoff& theta) {
  if (at_saddle(x)) return 0.0;
  if (x.x2 == 0.0) return 0.5 * sgn(x.x1);
  return 0.5 * sgn(x.x1) * theta.value(std::abs(x.x1) / std::abs(x.x2));
}

Vec2 eval_b2(const Point2& x, const ThetaCutoff& theta) {
  if (at_saddle(x) || x.x1 == 0.0 || x.x2 == 0.0) return {};
  const double a1 = std::abs(x.x1);
  const double a2 = std::abs(x.x2);
  const double dtheta = theta.derivative(a1 / a2);
  if (dtheta == 0.0) return {};
  const double d1v = 0.5 * dtheta / a2;
  const double d2v = -0.5 * sgn(x.x1) * sgn(x.x2) * dtheta * a1 / (a2 * a2);
  return {-d2v, d1v};
}

std::array<double, 4> eval_A2(const Point2& x, const ThetaCutoff& theta) {
  const double v = eval_v(x, theta);
  return {0.0, -v, v, 0.0};
}

BoundaryFlux boundary_flux(int n_quad, const ThetaCutoff& theta) {
  if (n_quad < 2) throw domain_error("boundary_flux: n_quad must be >= 2");
  const int panels = n_quad / 2;
  const double h = 2.0 / panels;
  const double g = 0.5 / std::sqrt(3.0);

  // Outward normals and parametrisations of the four sides, s in (-1, 1).
  struct Side {
    Vec2 normal;
    Point2 (*at)(double);
  };
  const std::array<Side, 4> sides{{
      {{0.0, -1.0}, [](double s) { return Point2{s, -1.0}; }},
      {{1.0, 0.0}, [](double s) { return Point2{1.0, s}; }},
      {{0.0, 1.0}, [](double s) { return Point2{s, 1.0}; }},
      {{-1.0, 0.0}, [](double s) { return Point2{-1.0, s}; }},
  }};

  BoundaryFlux out;
  for (std::size_t k = 0; k < sides.size(); ++k) {
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double mid = -1.0 + (i + 0.5) * h;
      for (double off : {-g * h, g * h}) {
        const Point2 x = sides[k].at(mid + off);
        acc += 0.5 * h * eval_b2(x, theta).dot(sides[k].normal) * eval_u2(x, theta);
      }
    }
    out.sides[k] = acc;
  }
  out.total = out.sides[0] + out.sides[1] + out.sides[2] + out.sides[3];
  return out;
}

double disjoint_support_audit(std::span<const Point2> points, const ThetaCutoff& theta) {
  double worst = 0.0;
  for (const Point2& x : points) {
    worst = std::max(worst, eval_grad_u2(x, theta).norm() * eval_b2(x, theta).norm());
  }
  return worst;
}

double disjoint_support_audit(std::int64_t n_samples, std::uint64_t seed,
                              const ThetaCutoff& theta) {
  if (n_samples < 1) throw domain_error("disjoint_support_audit: n_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  double worst = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const Point2 x{coord(rng), coord(rng)};
    worst = std::max(worst, eval_grad_u2(x, theta).norm() * eval_b2(x, theta).norm());
  }
  return worst;
}

std::vector<FieldSample> sample_fields(int resolution, const ThetaCutoff& theta) {
  if (resolution < 1) throw domain_error("sample_fields: resolution must be >= 1");
  std::vector<FieldSample> out;
  out.reserve(static_cast<std::size_t>(resolution) * resolution);
  const double h = 2.0 / resolution;
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      const Point2 x{-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h};
      out.push_back({x, eval_weight(x), eval_u2(x, theta), eval_grad_u2(x, theta).norm(),
                     eval_b2(x, theta).norm()});
    }
  }
  return out;
}

}  // namespace dpgap
