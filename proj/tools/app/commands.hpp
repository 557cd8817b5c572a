#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "smrep/metrics.hpp"
#include "smrep/verification.hpp"

namespace smrep::app {

namespace fs = std::filesystem;

struct GenerateOutputs {
  fs::path dataset;
  fs::path provenance;
  std::size_t records = 0;
};

/// Writes dataset.smds and dataset.smpr into config.output_dir and updates the manifest.
GenerateOutputs cmd_generate(const RunConfig& config);

struct TrainOutputs {
  fs::path checkpoint;
  fs::path sidecar;
  fs::path loss_csv;
  std::vector<double> loss_curve;
};

/// Trains on an SMDS file (its SMPR sidecar is picked up when present next to it).
/// Writes model.smnn, model.json and loss.csv.
TrainOutputs cmd_train(const RunConfig& config, const fs::path& dataset_path);

struct EvaluateOptions {
  fs::path checkpoint;
  /// Ignore the checkpoint and evaluate h = (x, y, 0) from the true forward model.
  bool forward_model_stub = false;
  std::vector<double> alphas{0.0, 10.0};
  fs::path output_dir = "out";
  bool write_report = true;
  bool write_scatter = true;
};

struct EvaluateOutputs {
  fs::path report_csv;
  fs::path scatter_csv;
  fs::path scatter_svg;
  Evaluation evaluation;
};

/// Evaluates a checkpoint: report.csv plus scatter.csv / scatter.svg. A degenerate
/// representation raises DegenerateInputError after a failure note is written.
EvaluateOutputs cmd_evaluate(const EvaluateOptions& options);

struct VerifyOutputs {
  fs::path csv;
  SuiteReport report;
};

/// Runs a verification suite and writes verify_<suite>.csv. Unknown suite: DomainError.
VerifyOutputs cmd_verify(const std::string& suite, std::uint64_t seed, std::size_t trials, const fs::path& output_dir);

struct RunSummary {
  ExplorationMode mode = ExplorationMode::Nominal;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double final_loss = 0.0;
  double constant_baseline_loss = 0.0;
  std::vector<DissimilarityReport> reports;
  DistractorSensitivity distractor;
  std::string dataset_digest;
  std::string checkpoint_digest;
  double seconds = 0.0;
};

struct StatsRow {
  ExplorationMode mode = ExplorationMode::Nominal;
  double alpha = 0.0;
  std::size_t runs = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ExperimentOutputs {
  fs::path stats_csv;
  fs::path runs_csv;
  fs::path reports_csv;
  std::vector<RunSummary> runs;
  std::vector<StatsRow> stats;
};

/// Seeds used by an experiment: config.seed, config.seed + 1, ...
std::vector<std::uint64_t> experiment_seeds(const RunConfig& config);

/// Full pipeline for every (mode, seed): collect, train, evaluate, distractor check.
/// Runs write to runs/<mode>-s<seed>/; aggregates go to stats.csv (per mode and alpha),
/// reports.csv and runs.csv. Failed runs are recorded and left out of the aggregates.
ExperimentOutputs cmd_experiment(const RunConfig& config, bool verbose = false);

/// Single pipeline run, in-memory apart from the files under run_dir.
RunSummary run_pipeline(const RunConfig& config, ExplorationMode mode, std::uint64_t seed, const fs::path& run_dir,
                        unsigned collect_workers, bool verbose);

std::vector<StatsRow> aggregate(const std::vector<RunSummary>& runs, const std::vector<ExplorationMode>& modes,
                                const std::vector<double>& alphas);

}  // namespace smrep::app
