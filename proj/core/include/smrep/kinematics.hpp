#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace smrep {

/// Planar vector in arm-length units. Used both for positions and displacements.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

using SensorPosition = Vec2;
using PlanarVector = Vec2;

inline constexpr std::size_t kMotorDim = 4;
inline constexpr std::size_t kJointCount = 3;
/// Index of the motor command that does not move the arm.
inline constexpr std::size_t kDistractorIndex = 3;

/// Uninterpreted motor command; components m1..m3 drive the joints, m4 is the distractor.
struct MotorState {
  std::array<double, kMotorDim> values{};

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const MotorState&, const MotorState&) = default;

  /// True iff every component is finite and in [-1, 1].
  bool valid() const;
  /// Copy with the distractor command replaced.
  MotorState with_distractor(double v) const;
};

struct ArmGeometry {
  std::array<double, kJointCount> lengths{0.5, 0.5, 0.5};
  /// Joint angle per unit motor command.
  double angle_gain = std::numbers::pi;

  double reach() const { return lengths[0] + lengths[1] + lengths[2]; }
  /// Throws DomainError unless every length is strictly positive and the gain finite.
  void validate() const;
};

/// Throws DomainError if a motor component is outside [-1, 1] or not finite.
void check_motor_state(const MotorState& m);

/// Sensor position for motor state `m`. Joint angles accumulate along the chain
/// (angle of segment k = gain * (m1 + ... + mk)); m4 is ignored.
SensorPosition forward(const MotorState& m, const ArmGeometry& geom = {});

/// forward(b) - forward(a).
PlanarVector displacement(const MotorState& a, const MotorState& b, const ArmGeometry& geom = {});

/// d forward / d (m1, m2, m3) as a 2x3 row-major array.
std::array<std::array<double, kJointCount>, 2> forward_jacobian(const MotorState& m, const ArmGeometry& geom = {});

}  // namespace smrep
