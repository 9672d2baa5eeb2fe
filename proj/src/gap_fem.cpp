#include "dpgap/gap_fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "dpgap/errors.hpp"

namespace dpgap {

namespace {

Vec2 element_gradient(const MeshSpace& mesh, const DofField& u, int e) {
  const auto& t = mesh.triangles[e];
  const auto& g = mesh.grad_lambda[e];
  Vec2 out;
  for (int i = 0; i < 3; ++i) out = out + g[i] * u.values[t[i]];
  return out;
}

struct PhaseJet {
  double value, d1_over_t, d2;
};

PhaseJet phase_jet(const DoublePhase& pair, double a, double t) {
  const auto j = pair.phi.jet(t);
  if (a == 0.0) return {j.value, j.d1_over_t, j.d2};
  const auto k = pair.psi.jet(t);
  return {j.value + a * k.value, j.d1_over_t + a * k.d1_over_t, j.d2 + a * k.d2};
}

void check_field(const EnrichedField& u, const MeshSpace& mesh) {
  if (u.base.values.size() != mesh.vertices.size()) {
    throw domain_error("field size does not match the mesh");
  }
}

double energy_impl(const EnrichedField& u, const DoublePhase& pair, const MeshSpace& mesh) {
  check_field(u, mesh);
  double total = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    const Vec2 G = element_gradient(mesh, u.base, e);
    const double a = element_phase(pair, mesh, e);
    double acc = 0.0;
    for (int q = mesh.qp_offset[e]; q < mesh.qp_offset[e + 1]; ++q) {
      const Vec2 V = G + mesh.qp_grad_E[q] * u.s;
      acc += mesh.qp_w[q] * pair.eval_phase(a, V.norm());
    }
    total += acc;
  }
  if (!std::isfinite(total)) throw numerical_error("ENERGY_OVERFLOW", "modular energy not finite");
  return total;
}

double enrichment_load_total(const MeshSpace& mesh) {
  double total = 0.0;
  for (double v : mesh.enrichment_load) total += v;
  return total;
}

double linear_impl(const EnrichedField& u, const MeshSpace& mesh) {
  check_field(u, mesh);
  double total = 0.0;
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    total += element_gradient(mesh, u.base, e).dot(mesh.b2_moment[e]);
  }
  return total + u.s * enrichment_load_total(mesh);
}

// Objective on the free variables: nodal values off the boundary, plus s.
class Problem {
 public:
  Problem(Space space, Objective objective, const DoublePhase& pair, const MeshSpace& mesh)
      : space_(space), objective_(objective), pair_(pair), mesh_(mesh) {
    free_.assign(mesh.vertices.size(), -1);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (!mesh.boundary[v]) free_[v] = nfree_++;
    }
    s_index_ = space == Space::Enriched ? nfree_ : -1;
    size_ = nfree_ + (space == Space::Enriched ? 1 : 0);
    load_ = enrichment_load_total(mesh);
  }

  int size() const { return size_; }
  bool linear() const { return objective_ == Objective::GZeroBC; }

  double value(const EnrichedField& u) const {
    return energy_impl(u, pair_, mesh_) + (linear() ? linear_impl(u, mesh_) : 0.0);
  }

  // Full gradient over all vertices and s (s last), modular part only.
  std::vector<double> energy_gradient(const EnrichedField& u) const {
    std::vector<double> g(mesh_.vertices.size() + 1, 0.0);
    for (int e = 0; e < mesh_.num_triangles(); ++e) {
      const Vec2 G = element_gradient(mesh_, u.base, e);
      const double a = element_phase(pair_, mesh_, e);
      Vec2 flux;
      double gs = 0.0;
      for (int q = mesh_.qp_offset[e]; q < mesh_.qp_offset[e + 1]; ++q) {
        const Vec2 V = G + mesh_.qp_grad_E[q] * u.s;
        const double w = mesh_.qp_w[q] * phase_jet(pair_, a, V.norm()).d1_over_t;
        flux = flux + V * w;
        gs += w * V.dot(mesh_.qp_grad_E[q]);
      }
      const auto& t = mesh_.triangles[e];
      for (int i = 0; i < 3; ++i) g[t[i]] += flux.dot(mesh_.grad_lambda[e][i]);
      g.back() += gs;
    }
    return g;
  }

  // Value, free gradient and free Hessian in one pass.
  double assemble(const EnrichedField& u, Eigen::VectorXd& grad,
                  std::vector<Eigen::Triplet<double>>& trip) const {
    grad.setZero(size_);
    trip.clear();
    double energy = 0.0;
    for (int e = 0; e < mesh_.num_triangles(); ++e) {
      const Vec2 G = element_gradient(mesh_, u.base, e);
      const double a = element_phase(pair_, mesh_, e);
      Vec2 flux;
      double gs = 0.0;
      double A11 = 0.0, A12 = 0.0, A22 = 0.0, b1 = 0.0, b2 = 0.0, css = 0.0;
      for (int q = mesh_.qp_offset[e]; q < mesh_.qp_offset[e + 1]; ++q) {
        const Vec2& gE = mesh_.qp_grad_E[q];
        const Vec2 V = G + gE * u.s;
        const double t = V.norm();
        const auto j = phase_jet(pair_, a, t);
        const double w = mesh_.qp_w[q];
        energy += w * j.value;
        flux = flux + V * (w * j.d1_over_t);
        gs += w * j.d1_over_t * V.dot(gE);
        // M = d2 n n^T + (f'/t)(I - n n^T)
        double m11 = j.d1_over_t, m12 = 0.0, m22 = j.d1_over_t;
        if (t > 0.0) {
          const double n1 = V.c1 / t, n2 = V.c2 / t, diff = j.d2 - j.d1_over_t;
          m11 += diff * n1 * n1;
          m12 += diff * n1 * n2;
          m22 += diff * n2 * n2;
        }
        m11 *= w;
        m12 *= w;
        m22 *= w;
        A11 += m11;
        A12 += m12;
        A22 += m22;
        if (s_index_ >= 0) {
          const double mb1 = m11 * gE.c1 + m12 * gE.c2, mb2 = m12 * gE.c1 + m22 * gE.c2;
          b1 += mb1;
          b2 += mb2;
          css += gE.c1 * mb1 + gE.c2 * mb2;
        }
      }
      const auto& tri = mesh_.triangles[e];
      const auto& gl = mesh_.grad_lambda[e];
      const Vec2 moment = mesh_.b2_moment[e];
      for (int i = 0; i < 3; ++i) {
        const int fi = free_[tri[i]];
        if (fi < 0) continue;
        grad[fi] += flux.dot(gl[i]) + (linear() ? moment.dot(gl[i]) : 0.0);
        for (int k = 0; k < 3; ++k) {
          const int fk = free_[tri[k]];
          if (fk < 0) continue;
          const double h = gl[i].c1 * (A11 * gl[k].c1 + A12 * gl[k].c2) +
                           gl[i].c2 * (A12 * gl[k].c1 + A22 * gl[k].c2);
          trip.emplace_back(fi, fk, h);
        }
        if (s_index_ >= 0) {
          const double h = gl[i].c1 * b1 + gl[i].c2 * b2;
          trip.emplace_back(fi, s_index_, h);
          trip.emplace_back(s_index_, fi, h);
        }
      }
      if (s_index_ >= 0) {
        grad[s_index_] += gs;
        trip.emplace_back(s_index_, s_index_, css);
      }
    }
    double value = energy;
    if (linear()) {
      value += linear_impl(u, mesh_);
      if (s_index_ >= 0) grad[s_index_] += load_;
    }
    if (!std::isfinite(value)) throw numerical_error("ENERGY_OVERFLOW", "objective not finite");
    return value;
  }

  EnrichedField step(const EnrichedField& u, const Eigen::VectorXd& d, double alpha) const {
    EnrichedField out = u;
    for (int v = 0; v < mesh_.num_vertices(); ++v) {
      if (free_[v] >= 0) out.base.values[v] += alpha * d[free_[v]];
    }
    if (s_index_ >= 0) out.s += alpha * d[s_index_];
    return out;
  }

 private:
  Space space_;
  Objective objective_;
  const DoublePhase& pair_;
  const MeshSpace& mesh_;
  std::vector<int> free_;
  int nfree_ = 0;
  int s_index_ = -1;
  int size_ = 0;
  double load_ = 0.0;
};

EnrichedField initial_field(Objective objective, const MeshSpace& mesh, double scale) {
  EnrichedField u{DofField::zero(mesh), 0.0};
  if (objective == Objective::Dirichlet) {
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (mesh.boundary[v]) u.base.values[v] = scale * eval_u2(mesh.vertices[v]);
    }
  }
  return u;
}

}  // namespace

DofField DofField::zero(const MeshSpace& mesh) {
  DofField d;
  d.values.assign(mesh.vertices.size(), 0.0);
  return d;
}

double EnrichedField::eval(const MeshSpace& mesh, const Point2& x) const {
  const int e = mesh.locate(x);
  if (e < 0) throw domain_error("EnrichedField::eval: point outside the square");
  const auto& t = mesh.triangles[e];
  const auto& g = mesh.grad_lambda[e];
  const Point2& p0 = mesh.vertices[t[0]];
  double value = base.values[t[0]];
  for (int i = 1; i < 3; ++i) {
    // lambda_i vanishes at p0 for i != 0.
    const double li = g[i].dot({x.x1 - p0.x1, x.x2 - p0.x2});
    value += li * (base.values[t[i]] - base.values[t[0]]);
  }
  return value + s * eval_enrichment(x);
}

double element_phase(const DoublePhase& pair, const MeshSpace& mesh, int e) {
  return pair.weight.kind == Weight::Kind::Constant ? pair.weight.value
                                                    : static_cast<double>(mesh.phase[e]);
}

double modular_energy(const EnrichedField& u, const DoublePhase& pair, const MeshSpace& mesh) {
  return energy_impl(u, pair, mesh);
}

double modular_energy(const DofField& u, const DoublePhase& pair, const MeshSpace& mesh) {
  return energy_impl({u, 0.0}, pair, mesh);
}

double separating_functional(const EnrichedField& u, const MeshSpace& mesh) {
  return linear_impl(u, mesh);
}

double separating_functional(const DofField& u, const MeshSpace& mesh) {
  return linear_impl({u, 0.0}, mesh);
}

double functional_G(const EnrichedField& u, const DoublePhase& pair, const MeshSpace& mesh) {
  return energy_impl(u, pair, mesh) + linear_impl(u, mesh);
}

double functional_G(const DofField& u, const DoublePhase& pair, const MeshSpace& mesh) {
  return functional_G(EnrichedField{u, 0.0}, pair, mesh);
}

std::vector<double> modular_energy_gradient(const EnrichedField& u, const DoublePhase& pair,
                                            const MeshSpace& mesh) {
  check_field(u, mesh);
  return Problem(Space::Enriched, Objective::Dirichlet, pair, mesh).energy_gradient(u);
}

MinimizeResult minimize(Space space, Objective objective, const DoublePhase& pair,
                        const MeshSpace& mesh, const SolverOptions& opts,
                        const std::optional<EnrichedField>& start) {
  const Problem problem(space, objective, pair, mesh);
  EnrichedField u = start ? *start : initial_field(objective, mesh, opts.dirichlet_scale);
  check_field(u, mesh);
  if (space == Space::Conforming) u.s = 0.0;

  using SpMat = Eigen::SparseMatrix<double>;
  Eigen::SimplicialLDLT<SpMat> solver;
  bool analyzed = false;
  Eigen::VectorXd grad;
  std::vector<Eigen::Triplet<double>> trip;
  SpMat H(problem.size(), problem.size());

  MinimizeResult result;
  double last_decrease = std::numeric_limits<double>::infinity();
  int failed_searches = 0;
  constexpr double kArmijo = 1e-4;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (int it = 0;; ++it) {
    const double J = problem.assemble(u, grad, trip);
    result.value = J;
    const double gmax = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (it > 0 && last_decrease <= opts.relative_decrease * std::max(1.0, std::abs(J)) &&
        gmax < opts.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (it >= opts.max_iterations) break;
    result.iterations = it + 1;

    Eigen::VectorXd d;
    const bool use_gradient = failed_searches >= 3;
    if (!use_gradient) {
      H.setFromTriplets(trip.begin(), trip.end());
      if (!analyzed) {
        solver.analyzePattern(H);
        analyzed = true;
      }
      double shift = 0.0;
      const double diag = H.diagonal().cwiseAbs().maxCoeff();
      for (int attempt = 0; attempt < 8; ++attempt) {
        solver.setShift(shift);
        solver.factorize(H);
        if (solver.info() == Eigen::Success) {
          d = solver.solve(-grad);
          if (d.allFinite() && d.dot(grad) < 0.0) break;
        }
        d.resize(0);
        shift = shift == 0.0 ? 1e-12 * std::max(diag, 1e-300) : shift * 100.0;
      }
    }
    if (d.size() == 0 || use_gradient) {
      d = -grad;
      ++result.gradient_steps;
    }
    const double slope = d.dot(grad);
    double alpha = 1.0;
    bool accepted = false;
    EnrichedField trial;
    double Jt = J;
    for (int k = 0; k < 60; ++k) {
      trial = problem.step(u, d, alpha);
      Jt = problem.value(trial);
      // Near the minimum the predicted decrease sinks below the rounding noise
      // of the quadrature sum; such a step is taken as is.
      const bool at_floor = Jt - J <= 1024.0 * kEps * std::max(1.0, std::abs(J)) &&
                            -slope <= opts.relative_decrease * std::max(1.0, std::abs(J));
      if (Jt <= J + kArmijo * alpha * slope || at_floor) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      ++failed_searches;
      if (use_gradient) break;  // no descent left at working precision
      last_decrease = std::numeric_limits<double>::infinity();
      continue;
    }
    failed_searches = use_gradient ? failed_searches : 0;
    last_decrease = std::max(0.0, J - Jt);
    u = std::move(trial);
  }
  result.field = std::move(u);
  return result;
}

std::vector<ScalingRow> scaling_probe(const std::vector<double>& t_grid, const DoublePhase& pair,
                                      const MeshSpace& mesh) {
  std::vector<ScalingRow> rows;
  rows.reserve(t_grid.size());
  for (double t : t_grid) rows.push_back({t, functional_G(EnrichedField{DofField::zero(mesh), t}, pair, mesh)});
  return rows;
}

GapReport gap_experiment(double alpha, double beta, const std::vector<int>& levels,
                         const GapOptions& opts) {
  if (levels.empty() || !std::is_sorted(levels.begin(), levels.end())) {
    throw domain_error("gap_experiment: levels must be non-empty and ascending");
  }
  const RegimeReport regime = classify_borderline(alpha, beta);
  GapReport report;
  report.alpha = alpha;
  report.beta = beta;
  report.grading = opts.grading;
  report.verdict = regime.verdict;
  report.rule = regime.rule;
  report.dirichlet_scale = opts.solver.dirichlet_scale;

  const bool well_posed = regime.verdict == Verdict::Gap || opts.override_guard;
  if (opts.mode == GapMode::G && !well_posed) {
    throw precondition_error(
        "GAP_PRECONDITION_B_NOT_DUAL_INTEGRABLE",
        "G-mode needs b2 in L^{Phi*} and a finite-energy jump; classifier verdict is " +
            to_string(regime.verdict) + " (" + to_string(regime.rule) + ")");
  }
  const bool g_mode = opts.mode == GapMode::G || (opts.mode == GapMode::Auto && well_posed);
  const Objective objective = g_mode ? Objective::GZeroBC : Objective::Dirichlet;
  report.mode = g_mode ? "G" : "dirichlet";

  const DoublePhase pair = DoublePhase::borderline(alpha, beta);
  for (int n : levels) {
    const MeshSpace mesh = build_mesh(n, opts.grading);
    const MinimizeResult conf = minimize(Space::Conforming, objective, pair, mesh, opts.solver);
    const MinimizeResult enr =
        minimize(Space::Enriched, objective, pair, mesh, opts.solver, conf.field);
    GapLevel level;
    level.n = n;
    level.h_min = mesh.h_min();
    level.E1 = enr.value;
    level.E2 = conf.value;
    level.s_opt = enr.field.s;
    level.sep_value = separating_functional(enr.field, mesh);
    level.iters = conf.iterations + enr.iterations;
    level.converged = conf.converged && enr.converged;
    level.nested = level.E1 <= level.E2;
    if (!level.nested) {
      throw numerical_error("NESTING_VIOLATED", "enriched minimum above the conforming one at n = " +
                                                    std::to_string(n));
    }
    report.levels.push_back(level);
    if (opts.on_level) opts.on_level(mesh, conf, enr);
  }
  return report;
}

nlohmann::json GapReport::to_json() const {
  nlohmann::json lv = nlohmann::json::array();
  for (const auto& l : levels) {
    lv.push_back({{"n", l.n},
                  {"h_min", l.h_min},
                  {"E1", l.E1},
                  {"E2", l.E2},
                  {"s_opt", l.s_opt},
                  {"sep_value", l.sep_value},
                  {"iters", l.iters},
                  {"converged", l.converged},
                  {"nested", l.nested}});
  }
  return {{"alpha", alpha},
          {"beta", beta},
          {"grading", grading},
          {"mode", mode},
          {"dirichlet_scale", dirichlet_scale},
          {"levels", lv},
          {"verdict", to_string(verdict)},
          {"rule", to_string(rule)}};
}

GapReport GapReport::from_json(const nlohmann::json& j) {
  GapReport r;
  r.alpha = j.at("alpha").get<double>();
  r.beta = j.at("beta").get<double>();
  r.grading = j.at("grading").get<double>();
  r.mode = j.at("mode").get<std::string>();
  r.dirichlet_scale = j.at("dirichlet_scale").get<double>();
  for (const auto& l : j.at("levels")) {
    GapLevel g;
    g.n = l.at("n").get<int>();
    g.h_min = l.at("h_min").get<double>();
    g.E1 = l.at("E1").get<double>();
    g.E2 = l.at("E2").get<double>();
    g.s_opt = l.at("s_opt").get<double>();
    g.sep_value = l.at("sep_value").get<double>();
    g.iters = l.at("iters").get<int>();
    g.converged = l.at("converged").get<bool>();
    g.nested = l.at("nested").get<bool>();
    r.levels.push_back(g);
  }
  const auto verdict = j.at("verdict").get<std::string>();
  for (Verdict v : {Verdict::Gap, Verdict::NoGap, Verdict::Inconclusive}) {
    if (to_string(v) == verdict) r.verdict = v;
  }
  const auto rule = j.at("rule").get<std::string>();
  for (Rule x : {Rule::GapBothTailsFinite, Rule::NoGapPsiStarTailDiverges, Rule::NoGapPhiTailDiverges,
                 Rule::NoGapBothTailsDiverge, Rule::Inconclusive}) {
    if (to_string(x) == rule) r.rule = x;
  }
  return r;
}

namespace {

double fit_exponent(const std::vector<ConeTraceRow>& rows, double limit, bool plus) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double diff = std::abs((plus ? rows[i].mean_plus : rows[i].mean_minus) - limit);
    if (!(diff > 0.0) || rows[i].r >= 1.0) continue;
    const double x = std::log(std::log(1.0 / rows[i].r));
    const double y = std::log(diff);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  const double den = m * sxx - sx * sx;
  if (m < 2 || den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / den;
}

}  // namespace

ConeTrace cone_trace_diagnostic(const EnrichedField& u, const MeshSpace& mesh,
                                const std::vector<double>& radii) {
  check_field(u, mesh);
  if (radii.empty()) throw precondition_error("RANGE_ERROR", "cone trace needs radii");
  std::vector<double> rs = radii;
  std::sort(rs.begin(), rs.end());
  if (rs.front() < mesh.h_min() || rs.back() > 1.0) {
    throw precondition_error("RANGE_ERROR", "cone trace radii must lie in [h_min, 1]");
  }
  constexpr int kArc = 64;
  ConeTrace out;
  for (double r : rs) {
    double plus = 0.0, minus = 0.0;
    for (int j = 0; j < kArc; ++j) {
      const double th = std::numbers::pi / 4.0 + (j + 0.5) / kArc * (std::numbers::pi / 2.0);
      const double c = r * std::cos(th), s = r * std::sin(th);
      plus += u.eval(mesh, {c, s});
      minus += u.eval(mesh, {c, -s});
    }
    out.rows.push_back({r, plus / kArc, minus / kArc});
  }
  out.u_plus = out.rows.front().mean_plus;
  out.u_minus = out.rows.front().mean_minus;
  out.fit_exponent_plus = fit_exponent(out.rows, out.u_plus, true);
  out.fit_exponent_minus = fit_exponent(out.rows, out.u_minus, false);
  return out;
}

}  // namespace dpgap
