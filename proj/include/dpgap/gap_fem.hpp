#pragma once

// Convex minimization of F(u) = int Phi(x, |grad u|) and
// G(u) = F(u) + int b2 . grad u over conforming P1 fields (H side) and the
// same space plus span{eta u2} (W side).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpgap/mesh.hpp"
#include "dpgap/orlicz.hpp"
#include "dpgap/regime.hpp"

namespace dpgap {

struct DofField {
  std::vector<double> values;  ///< one per mesh vertex

  static DofField zero(const MeshSpace& mesh);
  /// Nodal interpolant of f.
  template <class F>
  static DofField interpolate(const MeshSpace& mesh, F&& f) {
    DofField d;
    d.values.reserve(mesh.vertices.size());
    for (const auto& x : mesh.vertices) d.values.push_back(f(x));
    return d;
  }
};

/// base + s eta u2. With s = 0 the field is conforming.
struct EnrichedField {
  DofField base;
  double s = 0.0;

  /// Point value; the enrichment is taken analytically.
  double eval(const MeshSpace& mesh, const Point2& x) const;
};

/// Phase of triangle e under the pair's weight.
double element_phase(const DoublePhase& pair, const MeshSpace& mesh, int e);

/// Quadrature of Phi(x, |grad u|); ENERGY_OVERFLOW when not finite.
double modular_energy(const EnrichedField& u, const DoublePhase& pair, const MeshSpace& mesh);
double modular_energy(const DofField& u, const DoublePhase& pair, const MeshSpace& mesh);

/// int b2 . grad u: edge moments for the nodal part, quadrature for the enrichment.
double separating_functional(const EnrichedField& u, const MeshSpace& mesh);
double separating_functional(const DofField& u, const MeshSpace& mesh);

/// F(u) + int b2 . grad u. The caller is responsible for the regime (see gap_experiment).
double functional_G(const EnrichedField& u, const DoublePhase& pair, const MeshSpace& mesh);
double functional_G(const DofField& u, const DoublePhase& pair, const MeshSpace& mesh);

/// Gradient of the modular energy with respect to every nodal value and s
/// (last entry), boundary nodes included.
std::vector<double> modular_energy_gradient(const EnrichedField& u, const DoublePhase& pair,
                                            const MeshSpace& mesh);

enum class Space { Conforming, Enriched };
enum class Objective {
  GZeroBC,    ///< G with homogeneous boundary values
  Dirichlet,  ///< F with u = t u2 on the boundary
};

struct SolverOptions {
  int max_iterations = 5000;
  double relative_decrease = 1e-10;
  double gradient_tolerance = 1e-8;
  /// Boundary data scale t for the Dirichlet objective.
  double dirichlet_scale = 10.0;
};

struct MinimizeResult {
  EnrichedField field;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  int gradient_steps = 0;  ///< fallbacks after three failed Newton line searches
};

/// Damped Newton with Armijo backtracking. `start` (if given) must match the
/// objective's boundary values; the enriched run is warm-started from it.
MinimizeResult minimize(Space space, Objective objective, const DoublePhase& pair,
                        const MeshSpace& mesh, const SolverOptions& opts = {},
                        const std::optional<EnrichedField>& start = {});

struct ScalingRow {
  double t = 0.0;
  double G = 0.0;
};
/// G(t E) for E = eta u2.
std::vector<ScalingRow> scaling_probe(const std::vector<double>& t_grid, const DoublePhase& pair,
                                      const MeshSpace& mesh);

enum class GapMode { Auto, G, Dirichlet };

struct GapOptions {
  double grading = 2.0;
  GapMode mode = GapMode::Auto;
  /// Run G-mode even when the classifier does not return Gap.
  bool override_guard = false;
  SolverOptions solver{};
  /// Called after each level with its mesh and both minimizers.
  std::function<void(const MeshSpace&, const MinimizeResult& conforming,
                     const MinimizeResult& enriched)>
      on_level;
};

struct GapLevel {
  int n = 0;
  double h_min = 0.0;
  double E1 = 0.0;  ///< enriched minimum
  double E2 = 0.0;  ///< conforming minimum
  double s_opt = 0.0;
  double sep_value = 0.0;
  int iters = 0;  ///< conforming plus enriched Newton iterations
  bool converged = false;
  bool nested = false;  ///< E1 <= E2

  friend bool operator==(const GapLevel&, const GapLevel&) = default;
};

struct GapReport {
  double alpha = 0.0;
  double beta = 0.0;
  double grading = 0.0;
  std::string mode;  ///< "G" or "dirichlet"
  double dirichlet_scale = 0.0;
  std::vector<GapLevel> levels;
  Verdict verdict = Verdict::Inconclusive;
  Rule rule = Rule::Inconclusive;

  nlohmann::json to_json() const;
  static GapReport from_json(const nlohmann::json& j);
  friend bool operator==(const GapReport&, const GapReport&) = default;
};

/// G-mode is well posed only when b2 is Phi*-integrable and eta u2 has finite
/// energy, i.e. the classifier returns Gap. Explicit G-mode otherwise throws
/// GAP_PRECONDITION_B_NOT_DUAL_INTEGRABLE; Auto falls back to Dirichlet.
GapReport gap_experiment(double alpha, double beta, const std::vector<int>& levels,
                         const GapOptions& opts = {});

struct ConeTraceRow {
  double r = 0.0;
  double mean_plus = 0.0;   ///< mean over the arc in x2 > |x1|
  double mean_minus = 0.0;  ///< mean over the arc in -x2 > |x1|
};

struct ConeTrace {
  std::vector<ConeTraceRow> rows;
  /// Estimates of the cone limits: the means at the smallest radius.
  double u_plus = 0.0;
  double u_minus = 0.0;
  /// Least-squares slope of log|mean(r) - limit| against log log(1/r),
  /// per cone; compare with (1 - alpha)/2. NaN with fewer than two usable radii.
  double fit_exponent_plus = 0.0;
  double fit_exponent_minus = 0.0;
};

/// Radii must lie in [h_min, 1]; RANGE_ERROR otherwise.
ConeTrace cone_trace_diagnostic(const EnrichedField& u, const MeshSpace& mesh,
                                const std::vector<double>& radii);

}  // namespace dpgap
