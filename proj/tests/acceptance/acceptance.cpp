// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   smrep_acceptance [--group fast|small|full|all] [--work-dir DIR]

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/QR>
#include <CLI11.hpp>
#include <json.hpp>

#include "app/commands.hpp"
#include "convert.hpp"
#include "oracles.hpp"
#include "smrep/metrics.hpp"
#include "smrep/verification.hpp"

namespace {

using namespace smrep;
using namespace smrep::app;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median_of(const ExperimentOutputs& out, ExplorationMode mode, double alpha) {
  for (const auto& s : out.stats)
    if (s.mode == mode && s.alpha == alpha) return s.median;
  throw std::runtime_error("missing stats row");
}

/// Ordering checks on per-mode medians, shared by the full and small runs.
Outcome check_ordering(const ExperimentOutputs& out, std::size_t expected_runs, double seconds, double budget) {
  using M = ExplorationMode;
  std::size_t completed = 0;
  for (const auto& r : out.runs) completed += r.ok ? 1 : 0;
  const double n0 = median_of(out, M::Nominal, 0.0), s0 = median_of(out, M::Static, 0.0),
               d0 = median_of(out, M::Dynamic, 0.0);
  const double n10 = median_of(out, M::Nominal, 10.0), s10 = median_of(out, M::Static, 10.0),
               d10 = median_of(out, M::Dynamic, 10.0);
  const bool d0_order = n0 < s0 && s0 < d0;
  const bool topo = n10 <= 1.2 * s10;
  const bool dyn = d10 >= 2.0 * n10;
  const bool time_ok = seconds <= budget;
  Outcome o;
  o.pass = completed == expected_runs && d0_order && topo && dyn && time_ok;
  o.detail = "median D0 nominal=" + num(n0) + " static=" + num(s0) + " dynamic=" + num(d0) + " [" +
             (d0_order ? "ordered" : "not ordered") + "]; median D10 nominal=" + num(n10) + " static=" + num(s10) +
             " dynamic=" + num(d10) + " [nominal<=1.2*static " + (topo ? "yes" : "no") + ", dynamic>=2*nominal " +
             (dyn ? "yes" : "no") + "]; runs " + std::to_string(completed) + "/" + std::to_string(expected_runs) +
             "; " + num(seconds) + " s (budget " + num(budget) + " s)";
  return o;
}

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  const auto report = verify_gradient_suite(20240601, 100);
  std::size_t passed = 0;
  double worst = 0.0;
  for (const auto& row : report.rows) {
    passed += row.pass ? 1 : 0;
    worst = std::max(worst, row.image_distance);
  }
  const double secs = seconds_since(t0);
  return {report.rows.size() == 100 && passed == 100 && worst <= 1e-4 && secs <= 60.0,
          std::to_string(passed) + "/100 instances, max relative error " + num(worst) + ", " + num(secs) + " s"};
}

Outcome dalpha_oracle() {
  Rng rng(99);
  const std::vector<double> alphas{0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0};
  double oracle_gap = 0.0;
  double invariance_gap = 0.0;
  bool monotone = true;
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(199));
    PointSet hs(n, 3), qs(n, 3);
    for (Eigen::Index i = 0; i < hs.size(); ++i) {
      hs.data()[i] = rng.uniform(-2.0, 2.0);
      qs.data()[i] = rng.uniform(-1.0, 1.0);
    }
    const auto values = dissimilarities(hs, qs, alphas);
    const auto hp = testing_support::to_points(hs);
    const auto qp = testing_support::to_points(qs);
    Eigen::Matrix3d g;
    for (int i = 0; i < 9; ++i) g.data()[i] = rng.uniform(-1.0, 1.0);
    const Eigen::Matrix3d rot = Eigen::HouseholderQR<Eigen::Matrix3d>(g).householderQ();
    PointSet moved = rng.uniform(0.1, 10.0) * hs * rot.transpose();
    moved.rowwise() += Eigen::RowVector3d(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const auto transformed = dissimilarities(moved, qs, alphas);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      oracle_gap = std::max(oracle_gap, std::abs(values[a] - oracle::dissimilarity(hp, qp, alphas[a])));
      invariance_gap = std::max(invariance_gap, std::abs(values[a] - transformed[a]));
      if (a > 0 && values[a] > values[a - 1]) monotone = false;
    }
  }
  return {oracle_gap <= 1e-12 && monotone && invariance_gap <= 1e-9,
          "50 sets, max |production - oracle| " + num(oracle_gap) + ", monotone " + (monotone ? "yes" : "no") +
              ", max similarity-transform change " + num(invariance_gap)};
}

Outcome perfect_representation() {
  const auto ev = evaluate(forward_model_encoder(), {0.0, 10.0});
  const double d0 = ev.reports[0].D;
  const double d10 = ev.reports[1].D;
  return {d0 < 1e-9 && d10 < 1e-9, "D0 " + num(d0) + ", D10 " + num(d10)};
}

Outcome compensability() {
  const auto report = verify_compensability_suite({11, 12, 13, 14, 15, 16, 17, 18, 19, 20}, 1000);
  double worst = 0.0;
  for (const auto& row : report.rows) worst = std::max(worst, row.image_distance);
  return {report.rows.size() == 1000 && worst <= 1e-9,
          std::to_string(report.rows.size()) + " trials, max non-boundary deviation " + num(worst)};
}

Outcome metric_class() {
  const auto report = verify_metric_class_suite(31337, 100);
  std::string detail;
  for (const auto& line : report.summary) detail += (detail.empty() ? "" : ", ") + line;
  return {report.ok, detail};
}

Outcome distractor_invariance(const ExperimentOutputs& out) {
  std::size_t held = 0;
  std::size_t seeds = 0;
  std::string ratios;
  for (const auto& r : out.runs) {
    if (r.mode != ExplorationMode::Nominal || !r.ok) continue;
    ++seeds;
    const bool ok = r.distractor.mean_shift <= 0.2 * r.distractor.rms_spread;
    held += ok ? 1 : 0;
    ratios += (ratios.empty() ? "" : " ") + num(r.distractor.ratio());
  }
  return {seeds == 10 && held >= 8,
          std::to_string(held) + "/" + std::to_string(seeds) + " nominal seeds with shift <= 0.2 x spread (ratios " +
              ratios + ")"};
}

Outcome reproducibility(const fs::path& a, const fs::path& b) {
  auto files = [](const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    const auto doc = nlohmann::json::parse(in);
    return std::make_pair(doc.at("files"), doc.at("dataset_sha256"));
  };
  const auto [fa, da] = files(a);
  const auto [fb, db] = files(b);
  std::size_t mismatched = 0;
  for (const auto& [name, digest] : fa.items())
    if (!fb.contains(name) || fb[name] != digest) ++mismatched;
  const bool same = fa == fb && da == db;
  return {same && fa.size() > 0,
          std::to_string(fa.size()) + " artifacts and " + std::to_string(da.size()) + " dataset digests compared, " +
              std::to_string(mismatched) + " mismatched"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string group = "all";
  std::string work = "acceptance_work";
  app.add_option("--group", group, "fast | small | full | all")->check(CLI::IsMember({"fast", "small", "full", "all"}));
  app.add_option("--work-dir", work, "scratch directory for experiment outputs");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = work;
  bool all_pass = true;
  auto report = [&](const std::string& name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  };
  const bool all = group == "all";

  if (all || group == "fast") {
    report("gradient-oracle", gradient_oracle);
    report("dalpha-oracle", dalpha_oracle);
    report("perfect-representation", perfect_representation);
    report("compensability", compensability);
    report("metric-class", metric_class);
  }

  if (all || group == "small") {
    RunConfig config;
    apply_preset(config, "small");
    fs::remove_all(root / "small_a");
    fs::remove_all(root / "small_b");
    config.output_dir = root / "small_a";
    const auto t0 = Clock::now();
    ExperimentOutputs first;
    report("mode-ordering-small", [&] {
      first = cmd_experiment(config);
      return check_ordering(first, 15, seconds_since(t0), 600.0);
    });
    report("reproducibility", [&] {
      auto again = config;
      again.output_dir = root / "small_b";
      cmd_experiment(again);
      return reproducibility(root / "small_a", root / "small_b");
    });
  }

  if (all || group == "full") {
    RunConfig config;
    config.seed_count = 10;
    fs::remove_all(root / "full");
    config.output_dir = root / "full";
    const auto t0 = Clock::now();
    ExperimentOutputs full;
    report("mode-ordering-full", [&] {
      full = cmd_experiment(config);
      return check_ordering(full, 30, seconds_since(t0), 7200.0);
    });
    report("distractor-invariance", [&] { return distractor_invariance(full); });
  }

  return all_pass ? 0 : 1;
}
