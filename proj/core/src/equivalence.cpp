#include "smrep/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smrep/error.hpp"
#include "smrep/rng.hpp"

namespace smrep {

namespace {

constexpr double kPositionClassTolerance = 1e-9;
constexpr double kPairPrecondition = 1e-10;
constexpr double kCompensabilityTolerance = 1e-9;
/// Residual below which Gauss-Newton stops; near the double-precision floor for unit-scale positions.
constexpr double kResidualFloor = 1e-14;

MotorState random_motor(Rng& rng) {
  MotorState m;
  for (double& v : m.values) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

ImageComparison compare_renders(const Scene& scene_a, const BasePose& base_a, const SensorPosition& p_a,
                                const Scene& scene_b, const BasePose& base_b, const SensorPosition& p_b,
                                double margin) {
  const auto img_a = scene_a.render(base_a, p_a);
  const auto img_b = scene_b.render(base_b, p_b);
  const auto mask_a = scene_a.boundary_mask(base_a, p_a, margin);
  const auto mask_b = scene_b.boundary_mask(base_b, p_b, margin);

  ImageComparison out;
  double sq = 0.0;
  std::size_t channels = 0;
  for (std::size_t px = 0; px < kImageSide * kImageSide; ++px) {
    if (mask_a[px] || mask_b[px]) {
      ++out.boundary_pixels;
      continue;
    }
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = std::abs(img_a[px * 3 + c] - img_b[px * 3 + c]);
      out.max_deviation = std::max(out.max_deviation, d);
      sq += d * d;
      ++channels;
    }
  }
  out.rms_distance = channels > 0 ? std::sqrt(sq / static_cast<double>(channels)) : 0.0;
  return out;
}

PositionClassResult verify_position_class(const Scene& scene, const BasePose& base, const MotorState& m,
                                          const MotorState& m2, const ArmGeometry& geom) {
  const auto p = forward(m, geom);
  const auto p2 = forward(m2, geom);
  const double gap = (p2 - p).norm();
  if (gap > kPositionClassTolerance)
    throw DomainError("motor states are not in the same position class (position gap " + std::to_string(gap) + ")");
  PositionClassResult out;
  out.images = compare_renders(scene, base, p, scene, base, p2);
  out.pass = out.images.max_deviation <= kPositionClassTolerance;
  return out;
}

MotorState solve_position(const SensorPosition& target, MotorState start, const ArmGeometry& geom,
                          const IkOptions& options) {
  MotorState q = start;
  for (std::size_t j = 0; j < kJointCount; ++j) q[j] = std::clamp(q[j], -1.0, 1.0);
  MotorState best = q;
  double best_norm = (forward(q, geom) - target).norm();

  for (std::size_t it = 0; it < options.max_iterations && best_norm > kResidualFloor; ++it) {
    const Vec2 r = forward(q, geom) - target;
    const auto jac = forward_jacobian(q, geom);
    // step = J^T (J J^T + damping I)^-1 r
    double a = options.damping, b = 0.0, d = options.damping;
    for (std::size_t j = 0; j < kJointCount; ++j) {
      a += jac[0][j] * jac[0][j];
      b += jac[0][j] * jac[1][j];
      d += jac[1][j] * jac[1][j];
    }
    const double det = a * d - b * b;
    if (!(std::abs(det) > 0.0)) break;
    const double yx = (d * r.x - b * r.y) / det;
    const double yy = (a * r.y - b * r.x) / det;
    for (std::size_t j = 0; j < kJointCount; ++j) q[j] = std::clamp(q[j] - (jac[0][j] * yx + jac[1][j] * yy), -1.0, 1.0);

    const double norm = (forward(q, geom) - target).norm();
    if (norm < best_norm) {
      best_norm = norm;
      best = q;
    }
  }
  return best;
}

namespace {

EquivalentPair make_pair(const MotorState& m_a, const MotorState& m_b, const MotorState& m_a2, const MotorState& m_b2,
                         const PlanarVector& target_displacement, const ArmGeometry& geom) {
  EquivalentPair pair{m_a, m_b, m_a2, m_b2, 0.0};
  pair.displacement_error = (displacement(m_a2, m_b2, geom) - target_displacement).norm();
  return pair;
}

}  // namespace

EquivalentPair find_equivalent_pair(const MotorState& m_a, const MotorState& m_b, std::uint64_t seed,
                                    const ArmGeometry& geom, const IkOptions& options) {
  const PlanarVector d = displacement(m_a, m_b, geom);
  if (d.norm() > 2.0 * geom.reach() - options.feasibility_margin)
    throw InfeasibleError("displacement of length " + std::to_string(d.norm()) + " is beyond the feasible range");

  Rng rng(seed);
  for (std::size_t attempt = 0; attempt < options.restarts; ++attempt) {
    const MotorState m_a2 = random_motor(rng);
    const MotorState start = random_motor(rng);
    const SensorPosition target = forward(m_a2, geom) + d;
    if (target.norm() >= geom.reach()) continue;
    const MotorState m_b2 = solve_position(target, start, geom, options);
    auto pair = make_pair(m_a, m_b, m_a2, m_b2, d, geom);
    if (pair.displacement_error <= options.tolerance) return pair;
  }
  throw ConvergenceError("no equivalent pair found within " + std::to_string(options.restarts) + " restarts");
}

EquivalentPair complete_equivalent_pair(const MotorState& m_a, const MotorState& m_b, const MotorState& m_a2,
                                        std::uint64_t seed, std::optional<MotorState> initial_guess,
                                        const ArmGeometry& geom, const IkOptions& options) {
  const PlanarVector d = displacement(m_a, m_b, geom);
  const SensorPosition target = forward(m_a2, geom) + d;
  if (target.norm() > geom.reach()) throw InfeasibleError("target position is out of reach");

  Rng rng(seed);
  for (std::size_t attempt = 0; attempt < options.restarts; ++attempt) {
    const MotorState start = (attempt == 0 && initial_guess) ? *initial_guess : random_motor(rng);
    const MotorState m_b2 = solve_position(target, start, geom, options);
    auto pair = make_pair(m_a, m_b, m_a2, m_b2, d, geom);
    if (pair.displacement_error <= options.tolerance) return pair;
  }
  throw ConvergenceError("no equivalent pair found within " + std::to_string(options.restarts) + " restarts");
}

double metric_class_tolerance(double displacement_error, double lipschitz) {
  return 1e-6 + lipschitz * displacement_error;
}

MetricClassResult verify_metric_class(const Scene& scene, const EquivalentPair& pair, const BasePose& base,
                                      double lipschitz, const ArmGeometry& geom, bool check_precondition) {
  const auto p_a = forward(pair.m_a, geom);
  const auto p_b = forward(pair.m_b, geom);
  const auto p_a2 = forward(pair.m_a2, geom);
  const auto p_b2 = forward(pair.m_b2, geom);
  const double error = ((p_b2 - p_a2) - (p_b - p_a)).norm();
  if (check_precondition && !(error <= kPairPrecondition))
    throw DomainError("pair displacement error " + std::to_string(error) + " exceeds 1e-10");

  MetricClassResult out;
  out.shift = p_a - p_a2;
  const Scene shifted(shift_environment(scene.spec(), out.shift));
  out.first = compare_renders(shifted, base, p_a2, scene, base, p_a);
  out.second = compare_renders(shifted, base, p_b2, scene, base, p_b);
  out.tolerance = metric_class_tolerance(error, lipschitz);
  out.pass = out.first.max_deviation <= out.tolerance && out.second.max_deviation <= out.tolerance;
  return out;
}

double estimate_render_lipschitz(const Scene& scene, std::uint64_t seed, std::size_t probes, double step,
                                 const ArmGeometry& geom) {
  Rng rng(seed);
  const double room = scene.spec().room_side;
  double kappa = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    const BasePose base = make_base({rng.uniform(0.0, room), rng.uniform(0.0, room)}, room);
    const auto p = forward(random_motor(rng), geom);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const SensorPosition p2 = p + step * Vec2{std::cos(angle), std::sin(angle)};
    // Pixels whose sample crosses an edge during the probe are discontinuities, not slope.
    const auto cmp = compare_renders(scene, base, p, scene, base, p2, step + kBoundaryMargin);
    kappa = std::max(kappa, cmp.max_deviation / step);
  }
  return kappa;
}

CompensabilityTrial compensability_trial(const EnvironmentSpec& env, const BasePose& base, const SensorPosition& p,
                                         PlanarVector delta) {
  const Scene original(env);
  const Scene shifted(shift_environment(env, delta));
  CompensabilityTrial out;
  out.images = compare_renders(shifted, base, p, original, offset_base(base, delta, env.room_side), p);
  out.pass = out.images.max_deviation <= kCompensabilityTolerance;
  return out;
}

}  // namespace smrep
