#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "smrep/kinematics.hpp"
#include "smrep/neuralnet.hpp"

namespace smrep {

/// N points, one per row.
using PointSet = Eigen::MatrixXd;

/// Any map from motor states to 3D representations (a trained encoder or a stub).
using Encoder = std::function<MotorRepresentation(const MotorState&)>;

Encoder encoder_from(const Mlp<float>& net);
/// Stub encoder h = (x, y, 0) built from the true forward model.
Encoder forward_model_encoder(const ArmGeometry& geom = {});

/// Regular motor grid: `per_dim` interval centres in [-1, 1] on m1, m2, m3, with m4 fixed.
struct GridSpec {
  std::size_t per_dim = 10;
  double distractor = 0.0;

  std::vector<double> levels() const;
  std::size_t size() const { return per_dim * per_dim * per_dim; }
};

struct RepresentationSample {
  std::vector<MotorState> motors;
  PointSet representations;  // N x 3
  PointSet positions;        // N x 2
  GridSpec grid;

  std::size_t size() const { return motors.size(); }
};

/// Motor states of the grid in m1-major order (m3 varies fastest).
std::vector<MotorState> grid_motor_states(const GridSpec& grid);

RepresentationSample sample_grid(const Encoder& encoder, const ArmGeometry& geom = {}, const GridSpec& grid = {});

struct AlignmentMap {
  Eigen::Matrix<double, 3, 2> A = Eigen::Matrix<double, 3, 2>::Zero();
  Eigen::Vector3d intercept = Eigen::Vector3d::Zero();
  /// Mean over samples of the squared norm of the regression residual.
  double residual = 0.0;
};

/// Least squares h_i ~ A p_i + b via column-pivoting QR of [p_x p_y 1]. Throws
/// DegenerateInputError for fewer than 4 samples or rank-deficient positions.
AlignmentMap align(const PointSet& representations, const PointSet& positions);
inline AlignmentMap align(const RepresentationSample& sample) {
  return align(sample.representations, sample.positions);
}

/// Rows A p_i, the positions embedded in representation space.
PointSet apply_alignment(const AlignmentMap& map, const PointSet& positions);

/// Largest pairwise Euclidean distance within a point set.
double max_pairwise_distance(const PointSet& points);

/// D_alpha for each alpha: mean over pairs i < j of
/// |d_h(i,j) - d_q(i,j)| * exp(-alpha * d_q(i,j)), each d normalised by its set's
/// largest pairwise distance. The pair sum runs over fixed row blocks combined by
/// pairwise summation, so the result does not depend on how blocks are scheduled.
/// Throws DegenerateInputError for mismatched sizes, N < 2, or a set of identical points.
std::vector<double> dissimilarities(const PointSet& representations, const PointSet& aligned_positions,
                                    const std::vector<double>& alphas);
double dissimilarity(const PointSet& representations, const PointSet& aligned_positions, double alpha);

struct DissimilarityReport {
  std::string mode;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double D = 0.0;
  std::size_t N = 0;
};

struct Evaluation {
  RepresentationSample sample;
  AlignmentMap alignment;
  PointSet aligned_positions;
  std::vector<DissimilarityReport> reports;
};

inline const std::vector<double> kDefaultAlphas{0.0, 10.0};

/// sample_grid -> align -> dissimilarities. Reports carry the given provenance.
Evaluation evaluate(const Encoder& encoder, const std::vector<double>& alphas = kDefaultAlphas,
                    const std::string& mode = "", std::uint64_t seed = 0, const ArmGeometry& geom = {},
                    const GridSpec& grid = {});

/// Sensitivity of a representation to the distractor command over the grid.
struct DistractorSensitivity {
  /// Mean over grid points of |h(m4 = +level) - h(m4 = -level)|.
  double mean_shift = 0.0;
  /// sqrt of the mean squared pairwise distance of {h_i} at m4 = 0.
  double rms_spread = 0.0;

  double ratio() const { return rms_spread > 0.0 ? mean_shift / rms_spread : 0.0; }
};

DistractorSensitivity distractor_sensitivity(const Encoder& encoder, double level = 0.8, const GridSpec& grid = {});

/// CSV header "mode,seed,alpha,D,N".
void write_report_csv(std::ostream& out, const std::vector<DissimilarityReport>& reports, bool header = true);

/// Summary statistics used for the per-mode aggregates (linear-interpolated quantiles).
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

}  // namespace smrep
