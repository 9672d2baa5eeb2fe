#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dpgap/errors.hpp"
#include "dpgap/gap_fem.hpp"

using namespace dpgap;

namespace {

EnrichedField random_field(const MeshSpace& m, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  EnrichedField f{DofField::zero(m), u(rng)};
  for (auto& v : f.base.values) v = u(rng);
  return f;
}

std::string error_code(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("objectives are convex along random segments") {
  const auto m = build_mesh(8, 2.0);
  const auto pair = DoublePhase::borderline(2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    auto u = random_field(m, 100 + 2 * k, 2.0), w = random_field(m, 101 + 2 * k, 2.0);
    if (k % 2 == 0) u.s = w.s = 0.0;  // conforming space
    EnrichedField mid = u;
    for (std::size_t i = 0; i < mid.base.values.size(); ++i) {
      mid.base.values[i] = 0.5 * (u.base.values[i] + w.base.values[i]);
    }
    mid.s = 0.5 * (u.s + w.s);
    const double G = functional_G(mid, pair, m);
    CHECK(G <= 0.5 * (functional_G(u, pair, m) + functional_G(w, pair, m)) + 1e-10);
    const double F = modular_energy(mid, pair, m);
    CHECK(F <= 0.5 * (modular_energy(u, pair, m) + modular_energy(w, pair, m)) + 1e-10);
  }
}

TEST_CASE("directional derivatives against central differences") {
  const auto m = build_mesh(8, 2.0);
  for (auto pair : {DoublePhase::borderline(2.0, 2.0), DoublePhase::borderline(0.5, 3.0)}) {
    for (int k = 0; k < 10; ++k) {
      const auto u = random_field(m, 7 + k, 3.0);
      const auto d = random_field(m, 70 + k, 1.0);
      const auto g = modular_energy_gradient(u, pair, m);
      double an = g.back() * d.s, size = std::abs(u.s);
      for (std::size_t i = 0; i < d.base.values.size(); ++i) {
        an += g[i] * d.base.values[i];
        size = std::max(size, std::abs(u.base.values[i]));
      }
      const double h = 1e-6 * size;
      EnrichedField p = u, q = u;
      for (std::size_t i = 0; i < d.base.values.size(); ++i) {
        p.base.values[i] += h * d.base.values[i];
        q.base.values[i] -= h * d.base.values[i];
      }
      p.s += h * d.s;
      q.s -= h * d.s;
      const double fd = (modular_energy(p, pair, m) - modular_energy(q, pair, m)) / (2 * h);
      CHECK(std::abs(fd - an) <= 1e-5 * std::abs(an));
    }
  }
}

TEST_CASE("separating functional on conforming fields and on the enrichment") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int n : {16, 32}) {
    const auto m = build_mesh(n, 2.0);
    const double tol = solenoidal_tolerance(m);
    for (int k = 0; k < 100; ++k) {
      DofField u = DofField::zero(m);
      for (int v = 0; v < m.num_vertices(); ++v) {
        if (!m.boundary[v]) u.values[v] = nd(rng);
      }
      CHECK(std::abs(separating_functional(u, m)) <= tol);
    }
    const EnrichedField E{DofField::zero(m), 1.0};
    CHECK(std::abs(separating_functional(E, m) + 1.0) <= tol);
    const auto a = random_field(m, 1, 1.0), b = random_field(m, 2, 1.0);
    EnrichedField sum = a;
    for (std::size_t i = 0; i < sum.base.values.size(); ++i) sum.base.values[i] += b.base.values[i];
    sum.s += b.s;
    CHECK(std::abs(separating_functional(sum, m) - separating_functional(a, m) -
                   separating_functional(b, m)) < 1e-12);
  }
}

TEST_CASE("conforming G minimum is zero") {
  const auto m = build_mesh(16, 2.0);
  const auto pair = DoublePhase::borderline(2.0, 2.0);
  const auto r = minimize(Space::Conforming, Objective::GZeroBC, pair, m);
  CHECK(r.converged);
  CHECK(std::abs(r.value) < 1e-12);
  CHECK(r.field.s == 0.0);
}

TEST_CASE("enriched G minimum is negative and stationary in s") {
  const auto m = build_mesh(16, 2.0);
  const auto pair = DoublePhase::borderline(2.0, 2.0);
  const auto c = minimize(Space::Conforming, Objective::GZeroBC, pair, m);
  const auto r = minimize(Space::Enriched, Objective::GZeroBC, pair, m, {}, c.field);
  CHECK(r.converged);
  CHECK(r.value < -0.05);
  CHECK(r.value <= c.value);
  double load = 0.0;
  for (double v : m.enrichment_load) load += v;
  const auto g = modular_energy_gradient(r.field, pair, m);
  CHECK(std::abs(g.back() + load) < 1e-8);
  CHECK(std::abs(separating_functional(r.field, m) + r.field.s) < 0.02 * r.field.s);
}

TEST_CASE("Dirichlet minimizers keep their boundary values") {
  const auto m = build_mesh(16, 2.0);
  const auto pair = DoublePhase::borderline(2.0, 0.5);
  SolverOptions o;
  o.dirichlet_scale = 3.0;
  const auto r = minimize(Space::Enriched, Objective::Dirichlet, pair, m, o);
  CHECK(r.converged);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.boundary[v]) CHECK(r.field.base.values[v] == 3.0 * eval_u2(m.vertices[v]));
  }
  CHECK(r.value == doctest::Approx(modular_energy(r.field, pair, m)).epsilon(1e-15));
}

TEST_CASE("scaling probe") {
  const auto m = build_mesh(16, 2.0);
  const auto rows = scaling_probe({0.0, 0.01, 1.0, 100.0}, DoublePhase::borderline(2.0, 2.0), m);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].G == 0.0);
  CHECK(rows[1].G < 0.0);
  CHECK(rows[3].G > 0.0);
  CHECK(rows[3].t == 100.0);
  // The modular term is o(t), so G(tE)/t tends to the load, about -1.
  const auto small = scaling_probe({1e-3, 1e-4, 1e-5, 1e-6}, DoublePhase::borderline(2.0, 2.0), m);
  for (std::size_t i = 1; i < small.size(); ++i) {
    CHECK(std::abs(small[i].G / small[i].t + 1.0) < std::abs(small[i - 1].G / small[i - 1].t + 1.0));
  }
  CHECK(std::abs(small.back().G / small.back().t + 1.0) < 1e-4);
}

TEST_CASE("gap experiment guard and modes") {
  GapOptions g;
  g.mode = GapMode::G;
  CHECK(error_code([&] { gap_experiment(2.0, 0.5, {8}, g); }) ==
        "GAP_PRECONDITION_B_NOT_DUAL_INTEGRABLE");
  CHECK(error_code([&] { gap_experiment(0.5, 0.5, {8}, g); }) ==
        "GAP_PRECONDITION_B_NOT_DUAL_INTEGRABLE");
  const auto fallback = gap_experiment(2.0, 0.5, {8});
  CHECK(fallback.mode == "dirichlet");
  CHECK(fallback.verdict == Verdict::NoGap);
  const auto gap = gap_experiment(2.0, 2.0, {8});
  CHECK(gap.mode == "G");
  CHECK(gap.verdict == Verdict::Gap);
  CHECK(gap.levels[0].nested);
  CHECK(gap.levels[0].E2 >= -1e-12);
  CHECK_THROWS_AS(gap_experiment(2.0, 2.0, {}), Error);
  CHECK_THROWS_AS(gap_experiment(2.0, 2.0, {16, 8}), Error);
}

TEST_CASE("gap report round trip and determinism") {
  const auto a = gap_experiment(2.0, 2.0, {8, 16});
  const auto b = gap_experiment(2.0, 2.0, {8, 16});
  CHECK(a == b);
  CHECK(GapReport::from_json(nlohmann::json::parse(a.to_json().dump())) == a);
  CHECK(a.levels[1].E1 < a.levels[0].E1);
}

TEST_CASE("cone trace") {
  const auto m = build_mesh(32, 2.0);
  const std::vector<double> radii{0.2, 0.05, 0.01, 1e-3};

  // The enrichment alone: plateau values +-1/2 inside eta = 1.
  const EnrichedField E{DofField::zero(m), 1.0};
  const auto te = cone_trace_diagnostic(E, m, radii);
  for (const auto& row : te.rows) CHECK(row.mean_plus - row.mean_minus == 1.0);

  const auto pair = DoublePhase::borderline(2.0, 2.0);
  const auto conf = minimize(Space::Conforming, Objective::GZeroBC, pair, m);
  const auto enr = minimize(Space::Enriched, Objective::GZeroBC, pair, m, {}, conf.field);
  const auto tc = cone_trace_diagnostic(conf.field, m, radii);
  CHECK(std::abs(tc.u_plus - tc.u_minus) < 1e-12);
  // The nodal part is continuous at the saddle, so the jump tends to s as r -> 0.
  const auto tw = cone_trace_diagnostic(enr.field, m, radii);
  for (std::size_t i = 1; i < tw.rows.size(); ++i) {
    CHECK(tw.rows[i - 1].mean_plus - tw.rows[i - 1].mean_minus >
          tw.rows[i].mean_plus - tw.rows[i].mean_minus);
  }
  CHECK(tw.u_plus - tw.u_minus <= enr.field.s);
  CHECK(tw.u_plus - tw.u_minus >= 0.85 * enr.field.s);

  const auto dir = minimize(Space::Enriched, Objective::Dirichlet, DoublePhase::borderline(2.0, 0.5), m);
  const auto td = cone_trace_diagnostic(dir.field, m, radii);
  REQUIRE(td.rows.size() == 4);
  CHECK(td.rows.front().r == 1e-3);
  CHECK(td.u_plus > 0.0);
  // u2 is odd in x2 and the mesh is symmetric, so the minimizer is odd too.
  CHECK(std::abs(td.u_plus + td.u_minus) < 1e-8);
  CHECK(std::isfinite(td.fit_exponent_plus));
  CHECK(error_code([&] { cone_trace_diagnostic(dir.field, m, {m.h_min() / 2}); }) == "RANGE_ERROR");
  CHECK(error_code([&] { cone_trace_diagnostic(dir.field, m, {2.0}); }) == "RANGE_ERROR");
}
