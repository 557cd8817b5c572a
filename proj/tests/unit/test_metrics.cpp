#include <gtest/gtest.h>

#include <Eigen/QR>
#include <sstream>

#include "convert.hpp"
#include "oracles.hpp"
#include "smrep/error.hpp"
#include "smrep/metrics.hpp"
#include "smrep/rng.hpp"

using namespace smrep;
using testing_support::to_points;

namespace {

PointSet random_points(Rng& rng, Eigen::Index n, Eigen::Index dim) {
  PointSet p(n, dim);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = rng.uniform(-1.0, 1.0);
  return p;
}

}  // namespace

TEST(Metrics, GridSample) {
  const auto sample = sample_grid(forward_model_encoder());
  EXPECT_EQ(sample.size(), 1000u);
  EXPECT_EQ(sample.representations.rows(), 1000);
  for (Eigen::Index i = 0; i < 1000; ++i) EXPECT_LE(sample.positions.row(i).norm(), 1.5);
  const auto again = sample_grid(forward_model_encoder());
  EXPECT_EQ(sample.representations, again.representations);
  const auto motors = grid_motor_states({});
  EXPECT_DOUBLE_EQ(motors.front()[0], -0.9);
  EXPECT_DOUBLE_EQ(motors[1][2], -0.7);
  EXPECT_EQ(motors[1][0], motors[0][0]);
  for (const auto& m : motors) EXPECT_EQ(m[3], 0.0);
}

TEST(Metrics, AlignRecoversExactLinearMap) {
  Rng rng(1);
  const auto ps = random_points(rng, 50, 2);
  Eigen::Matrix<double, 3, 2> A;
  A << 1.5, -0.3, 0.2, 2.0, -0.7, 0.4;
  const Eigen::Vector3d b(0.1, -2.0, 3.0);
  PointSet hs = ps * A.transpose();
  hs.rowwise() += b.transpose();
  const auto map = align(hs, ps);
  EXPECT_LT((map.A - A).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((map.intercept - b).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(map.residual, 1e-18);
}

TEST(Metrics, AlignOnNoiseLeavesResidualNearVariance) {
  Rng rng(2);
  const auto ps = random_points(rng, 1000, 2);
  const auto hs = random_points(rng, 1000, 3);
  const auto map = align(hs, ps);
  const Eigen::RowVector3d mean = hs.colwise().mean();
  const double variance = (hs.rowwise() - mean).rowwise().squaredNorm().mean();
  EXPECT_NEAR(map.residual, variance, 0.1 * variance);
  EXPECT_LT(map.A.cwiseAbs().maxCoeff(), 0.1);
}

TEST(Metrics, AlignRejectsRankDeficiency) {
  Rng rng(3);
  PointSet ps = random_points(rng, 20, 2);
  ps.col(1) = ps.col(0);
  EXPECT_THROW(align(random_points(rng, 20, 3), ps), DegenerateInputError);
  EXPECT_THROW(align(random_points(rng, 20, 3), random_points(rng, 19, 2)), ShapeError);
}

TEST(Metrics, WorkedExample) {
  PointSet hs(3, 3), qs(3, 3);
  hs << 0, 0, 0, 1, 0, 0, 2, 0, 0;
  qs << 0, 0, 0, 1, 0, 0, 4, 0, 0;
  const double d0 = dissimilarity(hs, qs, 0.0);
  EXPECT_NEAR(d0, 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(d0, oracle::dissimilarity(to_points(hs), to_points(qs), 0.0), 1e-12);
  const double d10 = dissimilarity(hs, qs, 10.0);
  EXPECT_NEAR(d10, oracle::dissimilarity(to_points(hs), to_points(qs), 10.0), 1e-12);
  EXPECT_LT(d10, d0);
}

TEST(Metrics, IdenticalSetsGiveZero) {
  Rng rng(4);
  const auto hs = random_points(rng, 30, 3);
  for (double a : {0.0, 1.0, 10.0}) EXPECT_EQ(dissimilarity(hs, hs, a), 0.0);
}

TEST(Metrics, DegenerateSetsRejected) {
  Rng rng(5);
  const PointSet same = PointSet::Constant(10, 3, 0.5);
  EXPECT_THROW(dissimilarity(same, random_points(rng, 10, 3), 0.0), DegenerateInputError);
  EXPECT_THROW(dissimilarity(random_points(rng, 10, 3), same, 0.0), DegenerateInputError);
  EXPECT_THROW(dissimilarity(random_points(rng, 1, 3), random_points(rng, 1, 3), 0.0), DegenerateInputError);
  EXPECT_THROW(dissimilarity(random_points(rng, 10, 3), random_points(rng, 10, 3), -1.0), DomainError);
}

TEST(Metrics, MatchesOracleMonotoneAndSymmetric) {
  Rng rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(199));
    const auto hs = random_points(rng, n, 3);
    const auto qs = random_points(rng, n, 3);
    const std::vector<double> alphas{0.0, 0.5, 2.0, 10.0, 50.0};
    const auto values = dissimilarities(hs, qs, alphas);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      ASSERT_NEAR(values[a], oracle::dissimilarity(to_points(hs), to_points(qs), alphas[a]), 1e-12);
      if (a > 0) {
        ASSERT_LE(values[a], values[a - 1]);
      }
    }
    EXPECT_NEAR(dissimilarity(hs, qs, 0.0), dissimilarity(qs, hs, 0.0), 1e-15);
  }
}

TEST(Metrics, SimilarityInvariance) {
  Rng rng(7);
  const auto hs = random_points(rng, 80, 3);
  const auto qs = random_points(rng, 80, 3);
  Eigen::Matrix3d g;
  for (int i = 0; i < 9; ++i) g.data()[i] = rng.uniform(-1.0, 1.0);
  const Eigen::Matrix3d rot = Eigen::HouseholderQR<Eigen::Matrix3d>(g).householderQ();
  PointSet moved = 3.7 * hs * rot.transpose();
  moved.rowwise() += Eigen::RowVector3d(5.0, -2.0, 0.5);
  for (double a : {0.0, 10.0}) EXPECT_NEAR(dissimilarity(moved, qs, a), dissimilarity(hs, qs, a), 1e-9);
}

TEST(Metrics, ForwardModelIsPerfect) {
  const auto ev = evaluate(forward_model_encoder(), {0.0, 10.0}, "stub", 1);
  ASSERT_EQ(ev.reports.size(), 2u);
  EXPECT_LT(ev.reports[0].D, 1e-9);
  EXPECT_LT(ev.reports[1].D, 1e-9);
  EXPECT_EQ(ev.reports[0].N, 1000u);
  EXPECT_EQ(ev.reports[1].alpha, 10.0);
}

TEST(Metrics, DegenerateEncoderRaises) {
  const Encoder flat = [](const MotorState&) { return MotorRepresentation{1.0, 2.0, 3.0}; };
  EXPECT_THROW(evaluate(flat), DegenerateInputError);
}

TEST(Metrics, DistractorSensitivity) {
  const auto exact = distractor_sensitivity(forward_model_encoder());
  EXPECT_EQ(exact.mean_shift, 0.0);
  EXPECT_GT(exact.rms_spread, 0.5);
  const Encoder leaky = [](const MotorState& m) {
    const auto p = forward(m);
    return MotorRepresentation{p.x, p.y, m[3]};
  };
  EXPECT_NEAR(distractor_sensitivity(leaky).mean_shift, 1.6, 1e-12);
}

TEST(Metrics, ReportCsv) {
  std::ostringstream out;
  write_report_csv(out, {{"nominal", 3, 10.0, 0.125, 1000}});
  EXPECT_EQ(out.str(), "mode,seed,alpha,D,N\nnominal,3,10,0.125,1000\n");
}

TEST(Metrics, Quantiles) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0}, 0.25), 1.25);
}
