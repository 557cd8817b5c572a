#include "smrep/verification.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "smrep/equivalence.hpp"
#include "smrep/error.hpp"
#include "smrep/rng.hpp"
#include "smrep/world.hpp"

namespace smrep {

namespace {

MotorState random_motor(Rng& rng) {
  MotorState m;
  for (double& v : m.values) v = rng.uniform(-1.0, 1.0);
  return m;
}

BasePose random_base(Rng& rng, double room) {
  return make_base({rng.uniform(0.0, room), rng.uniform(0.0, room)}, room);
}

std::string fmt_line(const char* key, double value) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s: %.6g", key, value);
  return buf;
}

}  // namespace

SuiteReport verify_compensability_suite(const std::vector<std::uint64_t>& seeds, std::size_t trials) {
  if (seeds.empty()) throw DomainError("compensability suite needs at least one seed");
  SuiteReport report{"compensability", {}, true, {}};
  double max_dev = 0.0;
  std::size_t boundary = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t seed = seeds[t % seeds.size()];
    Rng rng(derive_seed(seed, t));
    const auto env = generate_environment(rng.next_u64());
    const BasePose base = random_base(rng, env.room_side);
    const auto p = forward(random_motor(rng));
    const PlanarVector delta{rng.uniform(-env.room_side / 2, env.room_side / 2),
                             rng.uniform(-env.room_side / 2, env.room_side / 2)};
    const auto trial = compensability_trial(env, base, p, delta);
    report.rows.push_back({report.suite, t, seed, 0.0, trial.images.max_deviation, trial.images.boundary_pixels,
                           trial.pass});
    max_dev = std::max(max_dev, trial.images.max_deviation);
    boundary += trial.images.boundary_pixels;
    report.ok = report.ok && trial.pass;
  }
  report.summary.push_back(fmt_line("max_deviation", max_dev));
  report.summary.push_back(fmt_line("boundary_pixels_excluded", static_cast<double>(boundary)));
  return report;
}

SuiteReport verify_position_class_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport report{"position-class", {}, true, {}};
  std::size_t passed = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const Scene scene(generate_environment(rng.next_u64()));
    const BasePose base = random_base(rng, scene.spec().room_side);
    const MotorState m = random_motor(rng);
    MotorState m2;
    if (t % 2 == 0) {
      m2 = m.with_distractor(-m[kDistractorIndex]);
    } else {
      // Another posture reaching the same point: IK from random starts.
      for (int attempt = 0; attempt < 50; ++attempt) {
        m2 = solve_position(forward(m), random_motor(rng));
        if ((forward(m2) - forward(m)).norm() <= 1e-12) break;
      }
    }
    const double gap = (forward(m2) - forward(m)).norm();
    VerificationRow row{report.suite, t, seed, gap, 0.0, 0, false};
    if (gap <= 1e-9) {
      const auto res = verify_position_class(scene, base, m, m2);
      row.image_distance = res.images.max_deviation;
      row.boundary_pixels = res.images.boundary_pixels;
      row.pass = res.pass;
    }
    passed += row.pass ? 1 : 0;
    report.rows.push_back(row);
  }
  report.ok = passed == trials;
  report.summary.push_back(fmt_line("pass_fraction", trials ? static_cast<double>(passed) / static_cast<double>(trials) : 1.0));
  return report;
}

SuiteReport verify_metric_class_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport report{"metric-class", {}, true, {}};
  const ArmGeometry geom;
  // κ is measured once, on the first trial's environment.
  const double kappa = estimate_render_lipschitz(Scene(generate_environment(derive_seed(seed, ~0ULL))), seed);

  std::size_t matched_pass = 0;
  std::size_t distractor_exact = 0;
  std::size_t negatives = 0;
  double matched_sum = 0.0;
  double negative_sum = 0.0;
  std::vector<VerificationRow> negative_rows;

  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const Scene scene(generate_environment(rng.next_u64()));
    const BasePose base = random_base(rng, scene.spec().room_side);
    const MotorState m_a = random_motor(rng);
    const MotorState m_b = random_motor(rng);

    VerificationRow row{report.suite, t, seed, 0.0, 0.0, 0, false};
    try {
      const auto pair = find_equivalent_pair(m_a, m_b, rng.next_u64(), geom);
      const auto res = verify_metric_class(scene, pair, base, kappa, geom);
      row.displacement_error = pair.displacement_error;
      row.image_distance = res.second.max_deviation;
      row.boundary_pixels = res.first.boundary_pixels + res.second.boundary_pixels;
      row.pass = res.pass;
      matched_sum += res.second.max_deviation;

      // Negative control: m_b2 re-solved for a target displaced by 0.1.
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const SensorPosition wrong = forward(pair.m_b2) + 0.1 * Vec2{std::cos(angle), std::sin(angle)};
      if (wrong.norm() < geom.reach()) {
        EquivalentPair bad = pair;
        bad.m_b2 = solve_position(wrong, pair.m_b2, geom);
        bad.displacement_error = (displacement(bad.m_a2, bad.m_b2) - displacement(bad.m_a, bad.m_b)).norm();
        const auto neg = verify_metric_class(scene, bad, base, kappa, geom, false);
        negative_rows.push_back({"metric-class-negative", t, seed, bad.displacement_error, neg.second.max_deviation,
                                 neg.first.boundary_pixels + neg.second.boundary_pixels,
                                 bad.displacement_error >= 0.05 && !neg.pass});
        negative_sum += neg.second.max_deviation;
        ++negatives;
      }
    } catch (const ConvergenceError&) {
      row.pass = false;
    }

    // Distractor-only pair: exact member of the class, δ = 0.
    const EquivalentPair exact{m_a, m_b, m_a.with_distractor(rng.uniform(-1.0, 1.0)),
                               m_b.with_distractor(rng.uniform(-1.0, 1.0)), 0.0};
    const auto ex = verify_metric_class(scene, exact, base, kappa, geom);
    const Scene shifted(shift_environment(scene.spec(), ex.shift));
    const bool bit_exact = ex.pass && ex.shift == PlanarVector{} &&
                           shifted.render(base, forward(exact.m_a2)) == scene.render(base, forward(m_a)) &&
                           shifted.render(base, forward(exact.m_b2)) == scene.render(base, forward(m_b));
    distractor_exact += bit_exact ? 1 : 0;

    matched_pass += row.pass ? 1 : 0;
    report.rows.push_back(row);
  }
  report.rows.insert(report.rows.end(), negative_rows.begin(), negative_rows.end());

  const double pass_fraction = trials ? static_cast<double>(matched_pass) / static_cast<double>(trials) : 1.0;
  const double matched_mean = trials ? matched_sum / static_cast<double>(trials) : 0.0;
  const double negative_mean = negatives ? negative_sum / static_cast<double>(negatives) : 0.0;
  report.ok = pass_fraction >= 0.99 && distractor_exact == trials &&
              (trials == 0 || (negatives > 0 && negative_mean > 0.0 && negative_mean >= 10.0 * matched_mean));
  report.summary.push_back(fmt_line("lipschitz_kappa", kappa));
  report.summary.push_back(fmt_line("pass_fraction", pass_fraction));
  report.summary.push_back(fmt_line("distractor_bit_exact", static_cast<double>(distractor_exact)));
  report.summary.push_back(fmt_line("matched_mean_distance", matched_mean));
  report.summary.push_back(fmt_line("negative_mean_distance", negative_mean));
  return report;
}

// Gradients -------------------------------------------------------------------------

namespace {

/// Loss plus the sign pattern of every hidden pre-activation, via a forward pass
/// assembled independently of loss_and_gradient.
double loss_with_pattern(const SensorimotorNet<double>& net, const Batch<double>& batch, std::vector<bool>& pattern) {
  pattern.clear();
  const auto b = batch.motor_t.cols();
  Matrix<double> motors(batch.motor_t.rows(), 2 * b);
  motors << batch.motor_t, batch.motor_next;
  ForwardTrace<double> enc;
  const Matrix<double> h = net.encoder.forward(motors, enc);
  Matrix<double> x(2 * h.rows() + batch.sensory_t.rows(), b);
  x << h.leftCols(b), h.rightCols(b), batch.sensory_t;
  ForwardTrace<double> pred;
  const Matrix<double> y = net.predictor.forward(x, pred);
  for (const auto* trace : {&enc, &pred})
    for (std::size_t l = 0; l + 1 < trace->pre_activation.size(); ++l)
      for (Eigen::Index i = 0; i < trace->pre_activation[l].size(); ++i)
        pattern.push_back(trace->pre_activation[l].data()[i] > 0.0);
  return (y - batch.sensory_next).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

GradientCheck check_gradients(const SensorimotorNet<double>& net, const Batch<double>& batch, double step,
                              double tolerance) {
  SensorimotorNet<double> analytic;
  loss_and_gradient(net, batch, analytic);

  GradientCheck out;
  SensorimotorNet<double> probe = net;
  auto params = parameter_spans(probe);
  auto grads = parameter_spans(analytic);
  std::vector<bool> base_pattern;
  std::vector<bool> pattern;
  loss_with_pattern(net, batch, base_pattern);

  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double saved = params[k][i];
      params[k][i] = saved + step;
      const double up = loss_with_pattern(probe, batch, pattern);
      out.kink_free = out.kink_free && pattern == base_pattern;
      params[k][i] = saved - step;
      const double down = loss_with_pattern(probe, batch, pattern);
      out.kink_free = out.kink_free && pattern == base_pattern;
      params[k][i] = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double g = grads[k][i];
      const double rel = std::abs(g - numeric) / std::max(1e-8, std::abs(g));
      out.max_relative_error = std::max(out.max_relative_error, rel);
      out.failures += rel > tolerance ? 1 : 0;
      ++out.components;
    }
  }
  return out;
}

ToyInstance make_toy_instance(std::uint64_t seed) {
  constexpr std::size_t sensory = 5;
  constexpr Eigen::Index batch_size = 4;
  ToyInstance inst{build_networks<double>(seed, {4, 6, 5, 3}, {3 + 3 + sensory, 7, 6, sensory}), {}};
  Rng rng(derive_seed(seed, 1));
  for (auto* mlp : {&inst.net.encoder, &inst.net.predictor})
    for (auto& layer : mlp->layers())
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-0.2, 0.2);

  auto fill = [&](Eigen::Index rows, double lo, double hi) {
    Matrix<double> m(rows, batch_size);
    for (Eigen::Index c = 0; c < batch_size; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
    return m;
  };
  inst.batch.motor_t = fill(4, -1.0, 1.0);
  inst.batch.sensory_t = fill(sensory, 0.0, 1.0);
  inst.batch.motor_next = fill(4, -1.0, 1.0);
  inst.batch.sensory_next = fill(sensory, 0.0, 1.0);
  return inst;
}

SuiteReport verify_gradient_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport report{"gradients", {}, true, {}};
  constexpr std::size_t kMaxRedraws = 100;
  double worst = 0.0;
  std::size_t redraws_total = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    // Finite differences are not an oracle across a kink; such instances are redrawn.
    std::size_t redraws = 0;
    GradientCheck check;
    std::uint64_t inst_seed = derive_seed(seed, t);
    for (;;) {
      const auto inst = make_toy_instance(inst_seed);
      check = check_gradients(inst.net, inst.batch);
      if (check.kink_free || redraws == kMaxRedraws) break;
      ++redraws;
      inst_seed = derive_seed(inst_seed, redraws);
    }
    const bool pass = check.kink_free && check.failures == 0;
    report.rows.push_back({report.suite, t, seed, 0.0, check.max_relative_error, redraws, pass});
    report.ok = report.ok && pass;
    worst = std::max(worst, check.max_relative_error);
    redraws_total += redraws;
  }
  report.summary.push_back(fmt_line("max_relative_error", worst));
  report.summary.push_back(fmt_line("kink_redraws", static_cast<double>(redraws_total)));
  return report;
}

// D_alpha ---------------------------------------------------------------------------

double naive_dissimilarity(const PointSet& hs, const PointSet& qs, double alpha) {
  const auto n = hs.rows();
  auto dist = [](const PointSet& s, Eigen::Index i, Eigen::Index j) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < s.cols(); ++c) acc += (s(i, c) - s(j, c)) * (s(i, c) - s(j, c));
    return std::sqrt(acc);
  };
  double h_max = 0.0;
  double q_max = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l) {
      h_max = std::max(h_max, dist(hs, k, l));
      q_max = std::max(q_max, dist(qs, k, l));
    }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dq = dist(qs, i, j) / q_max;
      sum += std::abs(dist(hs, i, j) / h_max - dq) * std::exp(-alpha * dq);
    }
  return 2.0 / (static_cast<double>(n) * static_cast<double>(n) - static_cast<double>(n)) * sum;
}

SuiteReport verify_dalpha_suite(std::uint64_t seed, std::size_t trials) {
  SuiteReport report{"dalpha-oracle", {}, true, {}};
  const std::vector<double> alphas{0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0};
  double worst_oracle = 0.0;
  double worst_invariance = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const auto n = static_cast<Eigen::Index>(2 + rng.below(199));
    PointSet hs(n, 3);
    PointSet qs(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index c = 0; c < 3; ++c) {
        hs(i, c) = rng.uniform(-1.0, 1.0);
        qs(i, c) = rng.uniform(-1.0, 1.0);
      }

    const auto values = dissimilarities(hs, qs, alphas);
    double oracle_gap = 0.0;
    bool monotone = true;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      oracle_gap = std::max(oracle_gap, std::abs(values[a] - naive_dissimilarity(hs, qs, alphas[a])));
      if (a > 0 && values[a] > values[a - 1]) monotone = false;
    }

    // Random rotation (QR of a random matrix), translation, positive scale.
    Eigen::Matrix3d g;
    for (Eigen::Index i = 0; i < 9; ++i) g.data()[i] = rng.uniform(-1.0, 1.0);
    const Eigen::Matrix3d rot = Eigen::HouseholderQR<Eigen::Matrix3d>(g).householderQ();
    const Eigen::RowVector3d shift(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0));
    const double scale = rng.uniform(0.1, 10.0);
    const PointSet moved = ((scale * hs * rot.transpose()).rowwise() + shift).eval();
    const auto moved_values = dissimilarities(moved, qs, alphas);
    double invariance_gap = 0.0;
    for (std::size_t a = 0; a < alphas.size(); ++a)
      invariance_gap = std::max(invariance_gap, std::abs(moved_values[a] - values[a]));

    const bool pass = oracle_gap <= 1e-12 && monotone && invariance_gap <= 1e-9;
    report.rows.push_back({report.suite, t, seed, invariance_gap, oracle_gap, 0, pass});
    report.ok = report.ok && pass;
    worst_oracle = std::max(worst_oracle, oracle_gap);
    worst_invariance = std::max(worst_invariance, invariance_gap);
  }
  report.summary.push_back(fmt_line("max_oracle_gap", worst_oracle));
  report.summary.push_back(fmt_line("max_invariance_gap", worst_invariance));
  return report;
}

SuiteReport run_suite(std::string_view name, std::uint64_t seed, std::size_t trials) {
  if (name == "compensability") return verify_compensability_suite({seed}, trials);
  if (name == "position-class") return verify_position_class_suite(seed, trials);
  if (name == "metric-class") return verify_metric_class_suite(seed, trials);
  if (name == "gradients") return verify_gradient_suite(seed, trials);
  if (name == "dalpha-oracle") return verify_dalpha_suite(seed, trials);
  throw DomainError("unknown verification suite \"" + std::string(name) + "\"");
}

void write_verification_csv(std::ostream& out, const std::vector<VerificationRow>& rows) {
  out << "suite,trial,seed,displacement_error,image_distance,boundary_pixels,pass\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.suite << ',' << r.trial << ',' << r.seed << ',';
    std::snprintf(buf, sizeof buf, "%.6e", r.displacement_error);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.6e", r.image_distance);
    out << buf << ',' << r.boundary_pixels << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

}  // namespace smrep
