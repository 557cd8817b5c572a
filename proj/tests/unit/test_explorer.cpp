#include <gtest/gtest.h>

#include <cstdlib>
#include <set>
#include <sstream>

#include "smrep/error.hpp"
#include "smrep/explorer.hpp"

using namespace smrep;

namespace {

MotorState motor_of(std::span<const float, kMotorDim> s) {
  MotorState m;
  for (std::size_t i = 0; i < kMotorDim; ++i) m[i] = s[i];
  return m;
}

}  // namespace

TEST(Explorer, ModeNames) {
  for (auto mode : {ExplorationMode::Nominal, ExplorationMode::Dynamic, ExplorationMode::Static})
    EXPECT_EQ(parse_mode(to_string(mode)), mode);
  EXPECT_THROW(parse_mode("sideways"), DomainError);
}

TEST(Explorer, CountsAndValidation) {
  const auto data = collect(ExplorationMode::Nominal, 2, 50, 1);
  EXPECT_EQ(data.size(), 100u);
  EXPECT_EQ(data.records().size(), 100u * kRecordFloats);
  EXPECT_EQ(kRecordFloats, 4u + 768 + 4 + 768);
  EXPECT_THROW(collect(ExplorationMode::Nominal, 0, 10, 1), DomainError);
  EXPECT_THROW(collect(ExplorationMode::Nominal, 1, 0, 1), DomainError);
}

TEST(Explorer, ReproducibleForAnyWorkerCount) {
  const auto a = collect(ExplorationMode::Dynamic, 4, 30, 9, 1);
  const auto b = collect(ExplorationMode::Dynamic, 4, 30, 9, 3);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == collect(ExplorationMode::Dynamic, 4, 30, 10, 1));
}

TEST(Explorer, NominalRecordsReRenderFromProvenance) {
  const auto data = collect(ExplorationMode::Nominal, 2, 40, 3);
  ASSERT_EQ(data.bases().size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto t = data.transition(i);
    const auto& b = data.bases()[i];
    EXPECT_EQ(b.base_t, b.base_next);
    const Scene scene(generate_environment(data.provenance().environment_seeds[i / 40]));
    const auto s_t = scene.render(b.base_t, forward(motor_of(t.motor_t)));
    const auto s_n = scene.render(b.base_next, forward(motor_of(t.motor_next)));
    for (std::size_t k = 0; k < kSensoryDim; ++k) {
      ASSERT_EQ(t.sensory_t[k], static_cast<float>(s_t[k]));
      ASSERT_EQ(t.sensory_next[k], static_cast<float>(s_n[k]));
    }
  }
}

TEST(Explorer, DynamicBasesNeverCoincide) {
  const auto data = collect(ExplorationMode::Dynamic, 1, 1000, 4);
  std::size_t same = 0;
  for (const auto& b : data.bases()) same += b.base_t == b.base_next ? 1 : 0;
  EXPECT_EQ(same, 0u);
}

TEST(Explorer, StaticModeIsAFunctionOfMotorState) {
  const auto data = collect(ExplorationMode::Static, 2, 200, 5);
  for (const auto& b : data.bases()) {
    EXPECT_EQ(b.base_t, static_base());
    EXPECT_EQ(b.base_next, static_base());
  }
  // Feed transition 0's motor state back through the renderer of its environment.
  const auto t0 = data.transition(0);
  const Scene scene(generate_environment(data.provenance().environment_seeds[0]));
  const auto again = scene.render(static_base(), forward(motor_of(t0.motor_t)));
  for (std::size_t k = 0; k < kSensoryDim; ++k) ASSERT_EQ(t0.sensory_t[k], static_cast<float>(again[k]));
}

TEST(Explorer, MotorMarginalsAreCentred) {
  const auto data = collect(ExplorationMode::Nominal, 1, 10000, 6);
  std::array<double, kMotorDim> mean{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto t = data.transition(i);
    for (std::size_t c = 0; c < kMotorDim; ++c) {
      ASSERT_GE(t.motor_t[c], -1.0f);
      ASSERT_LE(t.motor_t[c], 1.0f);
      mean[c] += t.motor_t[c];
    }
  }
  for (double m : mean) EXPECT_LT(std::abs(m / 10000.0), 0.05);
}

TEST(Explorer, EnvironmentSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (std::size_t e = 0; e < 100; ++e) seeds.insert(environment_seed(7, e));
  EXPECT_EQ(seeds.size(), 100u);
}

TEST(Explorer, WorkerCountHonoursEnvironment) {
  ::setenv("SMSEED_THREADS", "1", 1);
  EXPECT_EQ(default_worker_count(), 1u);
  ::setenv("SMSEED_THREADS", "3", 1);
  EXPECT_LE(default_worker_count(), 3u);
  ::setenv("SMSEED_THREADS", "0", 1);
  EXPECT_GE(default_worker_count(), 1u);
  ::unsetenv("SMSEED_THREADS");
  EXPECT_GE(default_worker_count(), 1u);
}

TEST(Explorer, DatasetAndProvenanceRoundTrip) {
  const auto data = collect(ExplorationMode::Static, 2, 25, 8);
  std::stringstream ds;
  write_dataset(ds, data);
  EXPECT_EQ(ds.str().size(), 4u + 4 + 1 + 8 + 8 + 4 + 4 + 50u * kRecordFloats * 4);
  auto back = read_dataset(ds);
  EXPECT_EQ(back.records().size(), data.records().size());
  EXPECT_TRUE(std::equal(back.records().begin(), back.records().end(), data.records().begin()));
  EXPECT_EQ(back.provenance().mode, ExplorationMode::Static);
  EXPECT_EQ(back.provenance().master_seed, 8u);

  std::stringstream pr;
  write_provenance(pr, data);
  read_provenance(pr, back);
  EXPECT_TRUE(back == data);
}

TEST(Explorer, DatasetFormatErrors) {
  const auto data = collect(ExplorationMode::Nominal, 1, 3, 8);
  std::stringstream ds;
  write_dataset(ds, data);
  const std::string good = ds.str();

  auto expect_offset = [](std::string bytes, const std::string& needle) {
    std::stringstream in(bytes);
    try {
      read_dataset(in);
      ADD_FAILURE() << "expected FormatError";
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto bad_magic = good;
  bad_magic[0] = 'X';
  expect_offset(bad_magic, "offset 0");
  auto bad_version = good;
  bad_version[4] = 2;
  expect_offset(bad_version, "offset 4");
  auto bad_mode = good;
  bad_mode[8] = 7;
  expect_offset(bad_mode, "offset 8");
  expect_offset(good.substr(0, good.size() - 5), "end of file");
  expect_offset(good + "x", "trailing");
}
