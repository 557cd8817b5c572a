#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "smrep/metrics.hpp"
#include "smrep/neuralnet.hpp"

namespace smrep {

/// One CSV row: suite,trial,seed,displacement_error,image_distance,boundary_pixels,pass.
///
/// Column use per suite:
///   compensability   image_distance = largest non-boundary channel deviation
///   position-class   displacement_error = |f(m2) - f(m)|, image_distance as above
///   metric-class     displacement_error of the pair, image_distance = second-image deviation;
///                    negative controls use suite name "metric-class-negative"
///   gradients        image_distance = largest relative gradient error,
///                    boundary_pixels = instances redrawn because a probe crossed a ReLU kink
///   dalpha-oracle    image_distance = |production - naive|,
///                    displacement_error = change under a random similarity transform
struct VerificationRow {
  std::string suite;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double displacement_error = 0.0;
  double image_distance = 0.0;
  std::size_t boundary_pixels = 0;
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  std::vector<VerificationRow> rows;
  /// False iff a hard invariant of the suite failed.
  bool ok = false;
  /// Human-readable summary lines (key: value).
  std::vector<std::string> summary;
};

inline const std::vector<std::string_view> kSuiteNames{"compensability", "position-class", "metric-class", "gradients",
                                                       "dalpha-oracle"};

/// Compensability over `trials` random (environment, base, p, δ), cycling through `seeds`.
SuiteReport verify_compensability_suite(const std::vector<std::uint64_t>& seeds, std::size_t trials);
SuiteReport verify_position_class_suite(std::uint64_t seed, std::size_t trials);
/// IK-generated pairs (ok iff >= 99% pass) plus distractor-only pairs (must match
/// bit-exactly) and negative controls (mean distance >= 10x the matched mean).
SuiteReport verify_metric_class_suite(std::uint64_t seed, std::size_t trials);
SuiteReport verify_gradient_suite(std::uint64_t seed, std::size_t trials);
SuiteReport verify_dalpha_suite(std::uint64_t seed, std::size_t trials);

/// Dispatch by name; throws DomainError for an unknown suite.
SuiteReport run_suite(std::string_view name, std::uint64_t seed, std::size_t trials);

void write_verification_csv(std::ostream& out, const std::vector<VerificationRow>& rows);

// Gradient checking -------------------------------------------------------------

struct GradientCheck {
  std::size_t components = 0;
  std::size_t failures = 0;
  double max_relative_error = 0.0;
  /// True iff no finite-difference probe changed the ReLU activation pattern.
  bool kink_free = true;
};

/// Compares loss_and_gradient against central differences of batch_loss, one
/// parameter at a time. Relative error uses max(1e-8, |analytic|) as denominator.
GradientCheck check_gradients(const SensorimotorNet<double>& net, const Batch<double>& batch, double step = 1e-5,
                              double tolerance = 1e-4);

struct ToyInstance {
  SensorimotorNet<double> net;
  Batch<double> batch;
};

/// Small random network pair (encoder 4-6-5-3, predictor 11-7-6-5) with non-zero
/// biases and a random batch of 4.
ToyInstance make_toy_instance(std::uint64_t seed);

// D_alpha reference ---------------------------------------------------------------

/// Direct double loop over the formula; no blocking, no shared work across alphas.
double naive_dissimilarity(const PointSet& hs, const PointSet& qs, double alpha);

}  // namespace smrep
