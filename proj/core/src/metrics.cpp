#include "smrep/metrics.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "smrep/error.hpp"

namespace smrep {

namespace {

constexpr std::size_t kRowBlock = 64;

/// Pairwise (tree) summation of a fixed sequence.
double tree_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n == 1) return v[0];
  const std::size_t half = n / 2;
  return tree_sum(v, half) + tree_sum(v + half, n - half);
}

}  // namespace

Encoder encoder_from(const Mlp<float>& net) {
  return [net](const MotorState& m) { return encode(net, m); };
}

Encoder forward_model_encoder(const ArmGeometry& geom) {
  return [geom](const MotorState& m) {
    const auto p = forward(m, geom);
    return MotorRepresentation{p.x, p.y, 0.0};
  };
}

std::vector<double> GridSpec::levels() const {
  std::vector<double> out;
  for (std::size_t k = 0; k < per_dim; ++k)
    out.push_back(-1.0 + (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(per_dim));
  return out;
}

std::vector<MotorState> grid_motor_states(const GridSpec& grid) {
  if (grid.per_dim == 0) throw DomainError("grid needs at least one level per dimension");
  const auto levels = grid.levels();
  std::vector<MotorState> out;
  out.reserve(grid.size());
  for (double a : levels)
    for (double b : levels)
      for (double c : levels) out.push_back(MotorState{{a, b, c, grid.distractor}});
  return out;
}

RepresentationSample sample_grid(const Encoder& encoder, const ArmGeometry& geom, const GridSpec& grid) {
  RepresentationSample s;
  s.grid = grid;
  s.motors = grid_motor_states(grid);
  const auto n = static_cast<Eigen::Index>(s.motors.size());
  s.representations.resize(n, 3);
  s.positions.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = s.motors[static_cast<std::size_t>(i)];
    const auto h = encoder(m);
    const auto p = forward(m, geom);
    s.representations.row(i) << h[0], h[1], h[2];
    s.positions.row(i) << p.x, p.y;
  }
  return s;
}

AlignmentMap align(const PointSet& representations, const PointSet& positions) {
  const auto n = positions.rows();
  if (representations.rows() != n) throw ShapeError("representation and position counts differ");
  if (positions.cols() != 2 || representations.cols() != 3)
    throw ShapeError("alignment expects 3D representations and 2D positions");
  if (n < 4) throw DegenerateInputError("alignment needs at least 4 samples");

  Eigen::MatrixXd design(n, 3);
  design.leftCols(2) = positions;
  design.col(2).setOnes();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw DegenerateInputError("positions are collinear or duplicated; alignment is rank deficient");

  const Eigen::MatrixXd coeffs = qr.solve(representations);  // 3 x 3
  AlignmentMap map;
  map.A = coeffs.topRows(2).transpose();
  map.intercept = coeffs.row(2).transpose();
  map.residual = (representations - design * coeffs).squaredNorm() / static_cast<double>(n);
  return map;
}

PointSet apply_alignment(const AlignmentMap& map, const PointSet& positions) {
  return positions * map.A.transpose();
}

double max_pairwise_distance(const PointSet& points) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) best = std::max(best, (points.row(i) - points.row(j)).squaredNorm());
  return std::sqrt(best);
}

std::vector<double> dissimilarities(const PointSet& representations, const PointSet& aligned_positions,
                                    const std::vector<double>& alphas) {
  const auto n = representations.rows();
  if (aligned_positions.rows() != n) throw DegenerateInputError("point sets have different sizes");
  if (n < 2) throw DegenerateInputError("dissimilarity needs at least two points");
  for (double a : alphas)
    if (!(a >= 0.0)) throw DomainError("alpha must be non-negative");

  const double h_scale = max_pairwise_distance(representations);
  const double q_scale = max_pairwise_distance(aligned_positions);
  if (!(h_scale > 0.0) || !(q_scale > 0.0))
    throw DegenerateInputError("all points in a set coincide; distances cannot be normalised");

  const std::size_t na = alphas.size();
  // Per-row partial sums, stored alpha-major so each alpha's rows are contiguous.
  std::vector<double> row_sums(na * static_cast<std::size_t>(n), 0.0);
  std::vector<double> acc(na);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dh = (representations.row(i) - representations.row(j)).norm() / h_scale;
      const double dq = (aligned_positions.row(i) - aligned_positions.row(j)).norm() / q_scale;
      const double diff = std::abs(dh - dq);
      for (std::size_t a = 0; a < na; ++a) acc[a] += diff * std::exp(-alphas[a] * dq);
    }
    for (std::size_t a = 0; a < na; ++a) row_sums[a * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = acc[a];
  }

  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  std::vector<double> out(na);
  std::vector<double> blocks;
  for (std::size_t a = 0; a < na; ++a) {
    const double* rows = row_sums.data() + a * static_cast<std::size_t>(n);
    blocks.clear();
    for (std::size_t start = 0; start < static_cast<std::size_t>(n); start += kRowBlock)
      blocks.push_back(tree_sum(rows + start, std::min(kRowBlock, static_cast<std::size_t>(n) - start)));
    out[a] = tree_sum(blocks.data(), blocks.size()) / pairs;
  }
  return out;
}

double dissimilarity(const PointSet& representations, const PointSet& aligned_positions, double alpha) {
  return dissimilarities(representations, aligned_positions, {alpha}).front();
}

Evaluation evaluate(const Encoder& encoder, const std::vector<double>& alphas, const std::string& mode,
                    std::uint64_t seed, const ArmGeometry& geom, const GridSpec& grid) {
  Evaluation ev;
  ev.sample = sample_grid(encoder, geom, grid);
  ev.alignment = align(ev.sample);
  ev.aligned_positions = apply_alignment(ev.alignment, ev.sample.positions);
  const auto values = dissimilarities(ev.sample.representations, ev.aligned_positions, alphas);
  for (std::size_t a = 0; a < alphas.size(); ++a)
    ev.reports.push_back({mode, seed, alphas[a], values[a], ev.sample.size()});
  return ev;
}

DistractorSensitivity distractor_sensitivity(const Encoder& encoder, double level, const GridSpec& grid) {
  DistractorSensitivity out;
  GridSpec centre = grid;
  centre.distractor = 0.0;
  const auto motors = grid_motor_states(centre);
  const auto n = motors.size();
  if (n < 2) throw DegenerateInputError("distractor sensitivity needs at least two grid points");

  Eigen::MatrixXd hs(static_cast<Eigen::Index>(n), 3);
  double shift = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto h0 = encoder(motors[i]);
    const auto hp = encoder(motors[i].with_distractor(level));
    const auto hm = encoder(motors[i].with_distractor(-level));
    hs.row(static_cast<Eigen::Index>(i)) << h0[0], h0[1], h0[2];
    shift += std::sqrt((hp[0] - hm[0]) * (hp[0] - hm[0]) + (hp[1] - hm[1]) * (hp[1] - hm[1]) +
                       (hp[2] - hm[2]) * (hp[2] - hm[2]));
  }
  out.mean_shift = shift / static_cast<double>(n);
  // sum_{i<j} |h_i - h_j|^2 = N * sum_i |h_i - mean|^2
  const Eigen::RowVector3d mean = hs.colwise().mean();
  const double scatter = (hs.rowwise() - mean).squaredNorm();
  out.rms_spread = std::sqrt(2.0 * scatter / static_cast<double>(n - 1));
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<DissimilarityReport>& reports, bool header) {
  if (header) out << "mode,seed,alpha,D,N\n";
  char buf[64];
  for (const auto& r : reports) {
    out << r.mode << ',' << r.seed << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.alpha);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.D);
    out << buf << ',' << r.N << '\n';
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(values.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace smrep
