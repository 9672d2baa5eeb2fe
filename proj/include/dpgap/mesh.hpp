#pragma once

// Graded square-ring triangulation of (-1,1)^2 around the saddle.
//
// Ring k is the square |x|_inf = (k/n)^g carrying 8k equally spaced vertices.
// Axes and both diagonals are mesh lines, so every triangle lies in a single
// phase of the checkerboard weight.

#include <array>
#include <vector>

#include "dpgap/geometry.hpp"

namespace dpgap {

struct MeshSpace {
  int n = 0;
  double grading = 1.0;
  std::vector<Point2> vertices;  ///< vertex 0 is the origin
  std::vector<std::array<int, 3>> triangles;  ///< counter-clockwise
  std::vector<double> area;
  /// Barycentric gradients: grad_lambda[e][i] for vertex i of triangle e.
  std::vector<std::array<Vec2, 3>> grad_lambda;
  /// a = 1 iff the triangle lies in |x1| <= |x2| (checkerboard weight).
  std::vector<int> phase;
  std::vector<char> boundary;   ///< per vertex
  std::vector<double> ring_radius;  ///< (k/n)^g, k = 0..n

  // Quadrature: points qp_offset[e] .. qp_offset[e+1]-1 belong to triangle e.
  std::vector<int> qp_offset;
  std::vector<Point2> qp_x;
  std::vector<double> qp_w;
  /// Gradient of the enrichment eta u2 at each quadrature point.
  std::vector<Vec2> qp_grad_E;

  /// int_T b2 dx by edge integrals of the stream function; adjacent triangles
  /// share each edge value, so the linear term is discretely solenoidal.
  std::vector<Vec2> b2_moment;
  /// int_T b2 . grad(eta u2) dx, accurate per-element quadrature.
  std::vector<double> enrichment_load;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double h_min() const { return ring_radius.at(1); }

  /// Triangle containing x (closed), or -1 outside the square.
  int locate(const Point2& x) const;
};

/// Triangles touching the origin are integrated by a Duffy map on the outer
/// 7/8 of their radial extent plus the 6-point rule on the innermost copy
/// scaled by 1/8.
inline constexpr int kCoreLevels = 3;

/// Requires n >= 8 and grading >= 1. Throws MESH_ERROR on a degenerate triangle.
MeshSpace build_mesh(int n, double grading);

/// Enrichment eta(|x|) u2(x) with eta = 1 on r <= 1/4 and 0 on r >= 1/2.
double eval_enrichment(const Point2& x);
Vec2 eval_grad_enrichment(const Point2& x);

/// Sum of |area-rule int_T b2 - edge-rule int_T b2| over triangles. Bounds the
/// linear term of a conforming field with unit gradient; decreases with n.
double solenoidal_tolerance(const MeshSpace& mesh);

}  // namespace dpgap
