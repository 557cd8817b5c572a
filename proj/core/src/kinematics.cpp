#include "smrep/kinematics.hpp"

#include <string>

#include "smrep/error.hpp"

namespace smrep {

bool MotorState::valid() const {
  for (double v : values)
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) return false;
  return true;
}

MotorState MotorState::with_distractor(double v) const {
  MotorState out = *this;
  out.values[kDistractorIndex] = v;
  return out;
}

void ArmGeometry::validate() const {
  for (double l : lengths)
    if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("arm segment lengths must be strictly positive");
  if (!std::isfinite(angle_gain)) throw DomainError("arm angle gain must be finite");
}

void check_motor_state(const MotorState& m) {
  for (std::size_t i = 0; i < kMotorDim; ++i) {
    const double v = m[i];
    if (!std::isfinite(v) || v < -1.0 || v > 1.0)
      throw DomainError("motor component m" + std::to_string(i + 1) + " = " + std::to_string(v) +
                        " is outside [-1, 1]");
  }
}

namespace {

std::array<double, kJointCount> cumulative_angles(const MotorState& m, const ArmGeometry& geom) {
  std::array<double, kJointCount> angles{};
  double sum = 0.0;
  for (std::size_t k = 0; k < kJointCount; ++k) {
    sum += m[k];
    angles[k] = geom.angle_gain * sum;
  }
  return angles;
}

}  // namespace

SensorPosition forward(const MotorState& m, const ArmGeometry& geom) {
  geom.validate();
  check_motor_state(m);
  const auto angles = cumulative_angles(m, geom);
  SensorPosition p;
  for (std::size_t k = 0; k < kJointCount; ++k) {
    p.x += geom.lengths[k] * std::cos(angles[k]);
    p.y += geom.lengths[k] * std::sin(angles[k]);
  }
  return p;
}

PlanarVector displacement(const MotorState& a, const MotorState& b, const ArmGeometry& geom) {
  return forward(b, geom) - forward(a, geom);
}

std::array<std::array<double, kJointCount>, 2> forward_jacobian(const MotorState& m, const ArmGeometry& geom) {
  check_motor_state(m);
  const auto angles = cumulative_angles(m, geom);
  std::array<std::array<double, kJointCount>, 2> jac{};
  // Joint j rotates every segment k >= j.
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t k = kJointCount; k-- > 0;) {
    sx += geom.lengths[k] * std::sin(angles[k]);
    sy += geom.lengths[k] * std::cos(angles[k]);
    jac[0][k] = -geom.angle_gain * sx;
    jac[1][k] = geom.angle_gain * sy;
  }
  return jac;
}

}  // namespace smrep
