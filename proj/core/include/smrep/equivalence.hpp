#pragma once

#include <cstdint>
#include <optional>

#include "smrep/kinematics.hpp"
#include "smrep/world.hpp"

namespace smrep {

/// Pixels whose sample point lies this close to a disk edge are left out of image
/// comparisons; point sampling is discontinuous exactly there.
inline constexpr double kBoundaryMargin = 1e-7;

/// Outcome of comparing two renders with boundary pixels excluded.
struct ImageComparison {
  /// Largest per-channel difference over non-boundary pixels.
  double max_deviation = 0.0;
  /// Root mean square per-channel difference over non-boundary pixels.
  double rms_distance = 0.0;
  /// Pixels flagged as boundary in either render.
  std::size_t boundary_pixels = 0;
};

/// Renders (scene_a, base_a, p_a) and (scene_b, base_b, p_b) and compares them.
ImageComparison compare_renders(const Scene& scene_a, const BasePose& base_a, const SensorPosition& p_a,
                                const Scene& scene_b, const BasePose& base_b, const SensorPosition& p_b,
                                double margin = kBoundaryMargin);

struct PositionClassResult {
  bool pass = false;
  ImageComparison images;
};

/// Checks that two motor states reaching the same sensor position produce the same
/// image. Requires |f(m2) - f(m)| <= 1e-9 (DomainError otherwise); passes iff the
/// largest non-boundary channel difference is <= 1e-9.
PositionClassResult verify_position_class(const Scene& scene, const BasePose& base, const MotorState& m,
                                          const MotorState& m2, const ArmGeometry& geom = {});

/// A motor pair and a candidate pair meant to realise the same sensor displacement.
struct EquivalentPair {
  MotorState m_a;
  MotorState m_b;
  MotorState m_a2;
  MotorState m_b2;
  /// |displacement(m_a2, m_b2) - displacement(m_a, m_b)|, measured.
  double displacement_error = 0.0;
};

struct IkOptions {
  double damping = 1e-3;
  std::size_t max_iterations = 200;
  std::size_t restarts = 50;
  /// Accepted displacement error.
  double tolerance = 1e-10;
  /// Displacements longer than 2 * reach - margin are rejected as infeasible.
  double feasibility_margin = 0.05;
};

/// Damped Gauss-Newton on the position residual over (m1, m2, m3), starting from
/// `start`; m4 is carried over. Returns the final iterate (not necessarily converged).
MotorState solve_position(const SensorPosition& target, MotorState start, const ArmGeometry& geom = {},
                          const IkOptions& options = {});

/// Samples m_a2 at random and solves for m_b2 with f(m_b2) = f(m_a2) + displacement(m_a, m_b),
/// restarting with a fresh m_a2 and start point until the error is within tolerance.
/// Throws InfeasibleError for displacements that no pair can realise and
/// ConvergenceError once the restart budget is spent.
EquivalentPair find_equivalent_pair(const MotorState& m_a, const MotorState& m_b, std::uint64_t seed,
                                    const ArmGeometry& geom = {}, const IkOptions& options = {});

/// Same as find_equivalent_pair with m_a2 fixed. `initial_guess` seeds the first attempt.
EquivalentPair complete_equivalent_pair(const MotorState& m_a, const MotorState& m_b, const MotorState& m_a2,
                                        std::uint64_t seed, std::optional<MotorState> initial_guess = std::nullopt,
                                        const ArmGeometry& geom = {}, const IkOptions& options = {});

struct MetricClassResult {
  /// δ = f(m_a) - f(m_a2), the environment shift that aligns the primed frame.
  PlanarVector shift;
  /// Shifted-environment render of f(m_a2) against the original render of f(m_a).
  ImageComparison first;
  /// Same for f(m_b2) against f(m_b): the predicted consequence.
  ImageComparison second;
  double tolerance = 0.0;
  bool pass = false;
};

/// Pass tolerance: 1e-6 + lipschitz * displacement_error.
double metric_class_tolerance(double displacement_error, double lipschitz);

/// Replays the metric-equivalence argument in the simulator: shift the environment by
/// δ, then both primed images must match their unprimed counterparts within tolerance.
/// Requires the measured displacement error <= 1e-10 unless `check_precondition` is false
/// (used for negative controls).
MetricClassResult verify_metric_class(const Scene& scene, const EquivalentPair& pair, const BasePose& base,
                                      double lipschitz, const ArmGeometry& geom = {}, bool check_precondition = true);

/// Empirical Lipschitz proxy of the renderer: largest non-boundary channel change per
/// unit sensor displacement over `probes` random finite-difference probes of size `step`.
double estimate_render_lipschitz(const Scene& scene, std::uint64_t seed, std::size_t probes = 200, double step = 1e-6,
                                 const ArmGeometry& geom = {});

struct CompensabilityTrial {
  ImageComparison images;
  bool pass = false;
};

/// render(ε - δ, base, p) against render(ε, base + δ, p); passes iff the largest
/// non-boundary channel difference is <= 1e-9.
CompensabilityTrial compensability_trial(const EnvironmentSpec& env, const BasePose& base, const SensorPosition& p,
                                         PlanarVector delta);

}  // namespace smrep
