#include "dpgap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "dpgap/errors.hpp"

namespace dpgap {

namespace {

struct Rule01 {
  std::vector<double> x;
  std::vector<double> w;
};

// 8-point Gauss-Legendre on [0, 1].
const Rule01& gauss01() {
  static const Rule01 rule = [] {
    using G = boost::math::quadrature::gauss<double, 8>;
    Rule01 r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = a.size(); i-- > 0;) {
      r.x.push_back(0.5 - 0.5 * a[i]);
      r.w.push_back(0.5 * w[i]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.x.push_back(0.5 + 0.5 * a[i]);
      r.w.push_back(0.5 * w[i]);
    }
    return r;
  }();
  return rule;
}

// Dunavant degree-4 rule: barycentric (a, a, 1 - 2a) orbits, weights sum to 1.
struct TriPoint {
  double l0, l1, l2, w;
};
constexpr double kA1 = 0.445948490915965, kW1 = 0.223381589678011;
constexpr double kA2 = 0.091576213509771, kW2 = 0.109951743655322;
constexpr std::array<TriPoint, 6> kSixPoint = {{
    {kA1, kA1, 1 - 2 * kA1, kW1},
    {kA1, 1 - 2 * kA1, kA1, kW1},
    {1 - 2 * kA1, kA1, kA1, kW1},
    {kA2, kA2, 1 - 2 * kA2, kW2},
    {kA2, 1 - 2 * kA2, kA2, kW2},
    {1 - 2 * kA2, kA2, kA2, kW2},
}};

// Lines x2 = k x1 where the fields have C^1 kinks.
constexpr std::array<double, 8> kKinkSlopes = {0.25, -0.25, 0.5, -0.5, 2.0, -2.0, 4.0, -4.0};

Point2 lerp(const Point2& a, const Point2& b, double t) {
  return {a.x1 + t * (b.x1 - a.x1), a.x2 + t * (b.x2 - a.x2)};
}

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x1 - o.x1) * (b.x2 - o.x2) - (a.x2 - o.x2) * (b.x1 - o.x1);
}

// Parameters in (0, 1) where the segment a -> b crosses a kink line.
std::vector<double> kink_breaks(const Point2& a, const Point2& b) {
  std::vector<double> t{0.0, 1.0};
  for (double k : kKinkSlopes) {
    const double fa = a.x2 - k * a.x1;
    const double fb = b.x2 - k * b.x1;
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) t.push_back(fa / (fa - fb));
  }
  std::sort(t.begin(), t.end());
  return t;
}

// Average of the stream function v over the segment a -> b.
double segment_mean_v(const Point2& a, const Point2& b) {
  const auto& g = gauss01();
  const auto t = kink_breaks(a, b);
  double acc = 0.0;
  for (std::size_t p = 0; p + 1 < t.size(); ++p) {
    const double len = t[p + 1] - t[p];
    if (len <= 0.0) continue;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      acc += len * g.w[i] * eval_v(lerp(a, b, t[p] + len * g.x[i]));
    }
  }
  return acc;
}

int ring_start(int k) { return k == 0 ? 0 : 1 + 4 * k * (k - 1); }

int vertex_index(int k, int m) {
  if (k == 0) return 0;
  return ring_start(k) + (m % (8 * k));
}

Point2 ring_point(int k, int m, double rho) {
  const int s = m / k;
  const int j = m % k;
  const double f = static_cast<double>(j) / k * rho;
  const double g = static_cast<double>(k - j) / k * rho;
  switch (s) {
    case 0: return {rho, f};
    case 1: return {g, rho};
    case 2: return {-f, rho};
    case 3: return {-rho, g};
    case 4: return {-rho, -f};
    case 5: return {-g, -rho};
    case 6: return {f, -rho};
    default: return {rho, -g};
  }
}

void push_point(MeshSpace& m, const Point2& x, double w) {
  m.qp_x.push_back(x);
  m.qp_w.push_back(w);
  m.qp_grad_E.push_back(eval_grad_enrichment(x));
}

void six_point(MeshSpace& m, const Point2& a, const Point2& b, const Point2& c, double area) {
  for (const auto& q : kSixPoint) {
    push_point(m, {q.l0 * a.x1 + q.l1 * b.x1 + q.l2 * c.x1, q.l0 * a.x2 + q.l1 * b.x2 + q.l2 * c.x2},
               q.w * area);
  }
}

// Triangle (0, P, Q): x = lambda ((1 - mu) P + mu Q), dx = |det| lambda d lambda d mu.
void duffy_core(MeshSpace& m, const Point2& P, const Point2& Q) {
  const auto& g = gauss01();
  const double det = std::abs(P.x1 * Q.x2 - P.x2 * Q.x1);
  const auto mu_breaks = kink_breaks(P, Q);
  for (int level = 0; level < kCoreLevels; ++level) {
    // lambda = exp(-y), y in [level ln 2, (level + 1) ln 2], d lambda = lambda dy
    for (std::size_t iy = 0; iy < g.x.size(); ++iy) {
      const double y = (level + g.x[iy]) * std::numbers::ln2;
      const double lambda = std::exp(-y);
      const double wy = g.w[iy] * std::numbers::ln2 * lambda * lambda;
      for (std::size_t p = 0; p + 1 < mu_breaks.size(); ++p) {
        const double len = mu_breaks[p + 1] - mu_breaks[p];
        if (len <= 0.0) continue;
        for (std::size_t im = 0; im < g.x.size(); ++im) {
          const Point2 r = lerp(P, Q, mu_breaks[p] + len * g.x[im]);
          push_point(m, {lambda * r.x1, lambda * r.x2}, det * wy * len * g.w[im]);
        }
      }
    }
  }
  const double scale = std::ldexp(1.0, -kCoreLevels);
  six_point(m, {0.0, 0.0}, {scale * P.x1, scale * P.x2}, {scale * Q.x1, scale * Q.x2},
            0.5 * det * scale * scale);
}

// int_T b2 . grad E by the 6-point rule on 4^levels congruent sub-triangles.
double refined_load(const Point2& a, const Point2& b, const Point2& c, int levels) {
  if (levels == 0) {
    const double area = 0.5 * std::abs(cross(a, b, c));
    double acc = 0.0;
    for (const auto& q : kSixPoint) {
      const Point2 x{q.l0 * a.x1 + q.l1 * b.x1 + q.l2 * c.x1, q.l0 * a.x2 + q.l1 * b.x2 + q.l2 * c.x2};
      acc += q.w * area * eval_b2(x).dot(eval_grad_enrichment(x));
    }
    return acc;
  }
  const Point2 ab = lerp(a, b, 0.5), bc = lerp(b, c, 0.5), ca = lerp(c, a, 0.5);
  return refined_load(a, ab, ca, levels - 1) + refined_load(ab, b, bc, levels - 1) +
         refined_load(ca, bc, c, levels - 1) + refined_load(ab, bc, ca, levels - 1);
}

constexpr ThetaCutoff kEta{0.25, 0.5};

}  // namespace

double eval_enrichment(const Point2& x) {
  const double r = std::hypot(x.x1, x.x2);
  return (1.0 - kEta.value(r)) * eval_u2(x);
}

Vec2 eval_grad_enrichment(const Point2& x) {
  const double r = std::hypot(x.x1, x.x2);
  if (r == 0.0) return {};
  const double eta = 1.0 - kEta.value(r);
  const double deta = -kEta.derivative(r) / r;
  const Vec2 g = eval_grad_u2(x);
  const double u = eval_u2(x);
  return {eta * g.c1 + u * deta * x.x1, eta * g.c2 + u * deta * x.x2};
}

MeshSpace build_mesh(int n, double grading) {
  if (n < 8) throw domain_error("build_mesh: requires n >= 8");
  if (!(grading >= 1.0 && std::isfinite(grading))) {
    throw domain_error("build_mesh: requires grading >= 1");
  }
  MeshSpace m;
  m.n = n;
  m.grading = grading;
  m.ring_radius.resize(n + 1);
  for (int k = 0; k <= n; ++k) {
    m.ring_radius[k] = k == n ? 1.0 : std::pow(static_cast<double>(k) / n, grading);
  }
  m.vertices.reserve(ring_start(n + 1));
  m.vertices.push_back({0.0, 0.0});
  for (int k = 1; k <= n; ++k) {
    for (int p = 0; p < 8 * k; ++p) m.vertices.push_back(ring_point(k, p, m.ring_radius[k]));
  }
  m.boundary.assign(m.vertices.size(), 0);
  for (int p = 0; p < 8 * n; ++p) m.boundary[vertex_index(n, p)] = 1;

  for (int k = 1; k <= n; ++k) {
    for (int s = 0; s < 8; ++s) {
      auto inner = [&](int j) { return vertex_index(k - 1, s * (k - 1) + j); };
      auto outer = [&](int j) { return vertex_index(k, s * k + j); };
      for (int j = 0; j < k; ++j) {
        m.triangles.push_back({outer(j), outer(j + 1), inner(j)});
        if (j + 1 < k) m.triangles.push_back({inner(j), outer(j + 1), inner(j + 1)});
      }
    }
  }

  const int ne = m.num_triangles();
  m.area.resize(ne);
  m.grad_lambda.resize(ne);
  m.phase.resize(ne);
  m.b2_moment.resize(ne);
  m.enrichment_load.assign(ne, 0.0);
  m.qp_offset.reserve(ne + 1);
  std::map<std::pair<int, int>, double> edge_mean;
  for (int e = 0; e < ne; ++e) {
    auto& tri = m.triangles[e];
    if (cross(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]) < 0.0) {
      std::swap(tri[1], tri[2]);
    }
    const Point2 &a = m.vertices[tri[0]], &b = m.vertices[tri[1]], &c = m.vertices[tri[2]];
    const double twice = cross(a, b, c);
    if (!(0.5 * twice >= 1e-14)) {
      throw numerical_error("MESH_ERROR", "degenerate triangle (area < 1e-14)");
    }
    m.area[e] = 0.5 * twice;
    m.grad_lambda[e] = {Vec2{(b.x2 - c.x2) / twice, (c.x1 - b.x1) / twice},
                        Vec2{(c.x2 - a.x2) / twice, (a.x1 - c.x1) / twice},
                        Vec2{(a.x2 - b.x2) / twice, (b.x1 - a.x1) / twice}};
    const Point2 centroid{(a.x1 + b.x1 + c.x1) / 3.0, (a.x2 + b.x2 + c.x2) / 3.0};
    m.phase[e] = eval_weight(centroid);

    // int_T b2 = sum over CCW edges of (P_b - P_a) mean(v); one mean per edge.
    Vec2 moment;
    for (int i = 0; i < 3; ++i) {
      const int va = tri[i], vb = tri[(i + 1) % 3];
      const auto key = std::minmax(va, vb);
      auto it = edge_mean.find(key);
      if (it == edge_mean.end()) {
        it = edge_mean.emplace(key, segment_mean_v(m.vertices[key.first], m.vertices[key.second]))
                 .first;
      }
      const Point2 &pa = m.vertices[va], &pb = m.vertices[vb];
      moment = moment + Vec2{pb.x1 - pa.x1, pb.x2 - pa.x2} * it->second;
    }
    m.b2_moment[e] = moment;

    m.qp_offset.push_back(static_cast<int>(m.qp_x.size()));
    const auto origin_at = std::find(tri.begin(), tri.end(), 0);
    if (origin_at != tri.end()) {
      const auto i = origin_at - tri.begin();
      duffy_core(m, m.vertices[tri[(i + 1) % 3]], m.vertices[tri[(i + 2) % 3]]);
    } else {
      six_point(m, a, b, c, m.area[e]);
    }

    // The load lives where b2 != 0 (phase 1) and grad eta != 0 (1/4 < r < 1/2).
    if (m.phase[e] == 1) {
      const double ra = std::hypot(a.x1, a.x2), rb = std::hypot(b.x1, b.x2);
      const double rc = std::hypot(c.x1, c.x2);
      const double diam = std::max({std::hypot(a.x1 - b.x1, a.x2 - b.x2),
                                    std::hypot(b.x1 - c.x1, b.x2 - c.x2),
                                    std::hypot(c.x1 - a.x1, c.x2 - a.x2)});
      if (std::max({ra, rb, rc}) > kEta.lo && std::min({ra, rb, rc}) - diam < kEta.hi) {
        m.enrichment_load[e] = refined_load(a, b, c, 3);
      }
    }
  }
  m.qp_offset.push_back(static_cast<int>(m.qp_x.size()));
  return m;
}

int MeshSpace::locate(const Point2& x) const {
  const double rho = std::max(std::abs(x.x1), std::abs(x.x2));
  if (!(rho <= 1.0)) return -1;
  auto k = static_cast<int>(std::lower_bound(ring_radius.begin(), ring_radius.end(), rho) -
                            ring_radius.begin());
  k = std::clamp(k, 1, n);
  // Strip k holds 8 (2k - 1) triangles starting after the 8 (k - 1)^2 inner ones.
  const int first = 8 * (k - 1) * (k - 1);
  const int count = 8 * (2 * k - 1);
  constexpr double kTol = -1e-12;
  for (int e = first; e < first + count; ++e) {
    const auto& t = triangles[e];
    const Point2 &a = vertices[t[0]], &b = vertices[t[1]], &c = vertices[t[2]];
    const double scale = 2.0 * area[e];
    if (cross(a, b, x) / scale >= kTol && cross(b, c, x) / scale >= kTol &&
        cross(c, a, x) / scale >= kTol) {
      return e;
    }
  }
  return -1;
}

double solenoidal_tolerance(const MeshSpace& mesh) {
  double total = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    Vec2 area_rule;
    for (int q = mesh.qp_offset[e]; q < mesh.qp_offset[e + 1]; ++q) {
      area_rule = area_rule + eval_b2(mesh.qp_x[q]) * mesh.qp_w[q];
    }
    total += Vec2{area_rule.c1 - mesh.b2_moment[e].c1, area_rule.c2 - mesh.b2_moment[e].c2}.norm();
  }
  return total;
}

}  // namespace dpgap
