#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "smrep/error.hpp"
#include "smrep/kinematics.hpp"
#include "smrep/rng.hpp"

using namespace smrep;

namespace {

MotorState random_motor(Rng& rng) {
  MotorState m;
  for (auto& v : m.values) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST(Kinematics, StraightArmIgnoresDistractor) {
  const auto p = forward({{0.0, 0.0, 0.0, 0.7}});
  EXPECT_DOUBLE_EQ(p.x, 1.5);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
}

TEST(Kinematics, RightAngleCase) {
  const auto p = forward({{0.5, -0.5, 0.5, 0.0}});
  EXPECT_NEAR(p.x, 0.5, 1e-15);
  EXPECT_NEAR(p.y, 1.0, 1e-15);
}

TEST(Kinematics, MatchesTrigOracle) {
  const auto p = forward({{0.1, 0.2, 0.3, 0.0}});
  const auto q = oracle::arm_position(0.1, 0.2, 0.3);
  EXPECT_NEAR(p.x, q[0], 1e-14);
  EXPECT_NEAR(p.y, q[1], 1e-14);

  Rng rng(7);
  for (int k = 0; k < 500; ++k) {
    const auto m = random_motor(rng);
    const auto a = forward(m);
    const auto b = oracle::arm_position(m[0], m[1], m[2]);
    ASSERT_NEAR(a.x, b[0], 1e-13);
    ASSERT_NEAR(a.y, b[1], 1e-13);
  }
}

TEST(Kinematics, RejectsOutOfRange) {
  EXPECT_THROW(forward({{1.1, 0.0, 0.0, 0.0}}), DomainError);
  EXPECT_THROW(forward({{0.0, 0.0, 0.0, -1.01}}), DomainError);
  EXPECT_THROW(forward({{NAN, 0.0, 0.0, 0.0}}), DomainError);
  EXPECT_NO_THROW(forward({{1.0, -1.0, 1.0, -1.0}}));
  EXPECT_FALSE(MotorState({{0.0, 2.0, 0.0, 0.0}}).valid());
}

TEST(Kinematics, GeometryValidation) {
  ArmGeometry g;
  EXPECT_NO_THROW(g.validate());
  g.lengths[1] = 0.0;
  EXPECT_THROW(g.validate(), DomainError);
  EXPECT_THROW(forward({}, g), DomainError);
}

TEST(Kinematics, DisplacementExamples) {
  const MotorState a{{0.0, 0.0, 0.0, 0.0}};
  const MotorState b{{0.5, -0.5, 0.5, 0.0}};
  EXPECT_EQ(displacement(b, b), (Vec2{0.0, 0.0}));
  const auto d = displacement(a, b);
  EXPECT_NEAR(d.x, -1.0, 1e-15);
  EXPECT_NEAR(d.y, 1.0, 1e-15);
  EXPECT_EQ(displacement(b, b.with_distractor(-0.9)), (Vec2{0.0, 0.0}));
  EXPECT_THROW(displacement(a, {{0.0, 3.0, 0.0, 0.0}}), DomainError);
}

TEST(Kinematics, DistractorInvarianceIsExact) {
  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    const auto m = random_motor(rng);
    ASSERT_EQ(forward(m), forward(m.with_distractor(rng.uniform(-1.0, 1.0))));
  }
}

TEST(Kinematics, ReachAndLipschitzBounds) {
  Rng rng(12);
  const double eps = 1e-6;
  for (int k = 0; k < 2000; ++k) {
    auto m = random_motor(rng);
    for (std::size_t j = 0; j < 3; ++j) m[j] = std::clamp(m[j], -1.0 + eps, 1.0 - eps);
    ASSERT_LE(forward(m).norm(), 1.5 + 1e-15);
    for (std::size_t j = 0; j < 3; ++j) {
      auto m2 = m;
      m2[j] += eps;
      ASSERT_LE((forward(m2) - forward(m)).norm(), std::numbers::pi * 1.5 * eps * (1 + 1e-9));
    }
  }
}

TEST(Kinematics, JacobianMatchesCentralDifferences) {
  Rng rng(13);
  const double h = 1e-6;
  for (int k = 0; k < 100; ++k) {
    auto m = random_motor(rng);
    for (std::size_t j = 0; j < 3; ++j) m[j] *= 0.99;
    const auto jac = forward_jacobian(m);
    for (std::size_t j = 0; j < 3; ++j) {
      auto up = m, down = m;
      up[j] += h;
      down[j] -= h;
      const auto fd = (1.0 / (2 * h)) * (forward(up) - forward(down));
      ASSERT_NEAR(jac[0][j], fd.x, 1e-8);
      ASSERT_NEAR(jac[1][j], fd.y, 1e-8);
    }
  }
}
