#include "app/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <streambuf>
#include <thread>

#include "app/manifest.hpp"
#include "app/scatter.hpp"
#include "smrep/error.hpp"
#include "smrep/explorer.hpp"
#include "smrep/neuralnet.hpp"

namespace smrep::app {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

/// Output stream buffer that only feeds a SHA-256.
class HashingBuf : public std::streambuf {
 public:
  std::string hex() { return sha_.hex_digest(); }

 protected:
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    sha_.update(s, static_cast<std::size_t>(n));
    return n;
  }
  int_type overflow(int_type ch) override {
    if (ch != traits_type::eof()) {
      const char c = static_cast<char>(ch);
      sha_.update(&c, 1);
    }
    return ch;
  }

 private:
  Sha256 sha_;
};

std::string dataset_digest(const Dataset& data) {
  HashingBuf buf;
  std::ostream out(&buf);
  write_dataset(out, data);
  out.flush();
  return buf.hex();
}

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_loss_csv(const fs::path& path, const std::vector<double>& curve) {
  auto out = open_out(path);
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < curve.size(); ++e) out << e + 1 << ',' << fmt(curve[e], "%.9g") << '\n';
}

nlohmann::json provenance_json(const DatasetProvenance& prov, std::size_t n) {
  return {{"mode", std::string(to_string(prov.mode))},
          {"master_seed", prov.master_seed},
          {"environment_seeds", prov.environment_seeds},
          {"per_env", prov.per_env},
          {"transitions", n}};
}

void write_checkpoint_files(const fs::path& checkpoint, const fs::path& sidecar, const SensorimotorNet<float>& net,
                            const RunConfig& config, const Dataset& data, const std::vector<double>& curve) {
  {
    auto out = open_out(checkpoint, true);
    write_checkpoint(out, net);
  }
  nlohmann::json side = {
      {"train", {{"epochs", config.train.epochs},
                 {"batch_size", config.train.batch_size},
                 {"learning_rate", config.train.learning_rate},
                 {"seed", config.train.seed}}},
      {"dataset", provenance_json(data.provenance(), data.size())},
      {"encoder_dims", net.encoder.dims()},
      {"predictor_dims", net.predictor.dims()},
      {"final_loss", curve.empty() ? nlohmann::json(nullptr) : nlohmann::json(curve.back())},
  };
  auto out = open_out(sidecar);
  out << side.dump(2) << '\n';
}

}  // namespace

GenerateOutputs cmd_generate(const RunConfig& config) {
  const auto t0 = Clock::now();
  fs::create_directories(config.output_dir);
  const Dataset data = collect(config.mode, config.env_count, config.per_env, config.seed);

  GenerateOutputs out{config.output_dir / "dataset.smds", config.output_dir / "dataset.smpr", data.size()};
  {
    auto f = open_out(out.dataset, true);
    write_dataset(f, data);
  }
  {
    auto f = open_out(out.provenance, true);
    write_provenance(f, data);
  }

  Manifest manifest(config.output_dir);
  manifest.add_command("generate");
  manifest.set("generate", to_json(config));
  manifest.set("dataset_provenance", provenance_json(data.provenance(), data.size()));
  manifest.add_file(out.dataset);
  manifest.add_file(out.provenance);
  manifest.add_timing("generate", seconds_since(t0));
  manifest.save();
  return out;
}

TrainOutputs cmd_train(const RunConfig& config, const fs::path& dataset_path) {
  const auto t0 = Clock::now();
  Dataset data;
  {
    auto in = open_in(dataset_path);
    data = read_dataset(in);
  }
  auto sidecar_path = dataset_path;
  sidecar_path.replace_extension(".smpr");
  if (fs::exists(sidecar_path)) {
    auto in = open_in(sidecar_path);
    read_provenance(in, data);
  }

  fs::create_directories(config.output_dir);
  const auto result = train(data, config.train);
  TrainOutputs out{config.output_dir / "model.smnn", config.output_dir / "model.json", config.output_dir / "loss.csv",
                   result.loss_curve};
  write_checkpoint_files(out.checkpoint, out.sidecar, result.net, config, data, result.loss_curve);
  write_loss_csv(out.loss_csv, result.loss_curve);

  Manifest manifest(config.output_dir);
  manifest.add_command("train");
  manifest.set("train", to_json(config));
  manifest.set("train_dataset", {{"path", dataset_path.string()}, {"sha256", sha256_file(dataset_path)}});
  manifest.add_file(out.checkpoint);
  manifest.add_file(out.sidecar);
  manifest.add_file(out.loss_csv);
  manifest.add_timing("train", seconds_since(t0));
  manifest.save();
  return out;
}

EvaluateOutputs cmd_evaluate(const EvaluateOptions& options) {
  const auto t0 = Clock::now();
  fs::create_directories(options.output_dir);

  Encoder encoder;
  std::string mode = "unknown";
  std::uint64_t seed = 0;
  if (options.forward_model_stub) {
    encoder = forward_model_encoder();
    mode = "forward-model";
  } else {
    auto in = open_in(options.checkpoint);
    encoder = encoder_from(read_checkpoint(in).encoder);
    auto sidecar = options.checkpoint;
    sidecar.replace_extension(".json");
    if (fs::exists(sidecar)) {
      std::ifstream js(sidecar);
      const auto doc = nlohmann::json::parse(js, nullptr, false);
      if (!doc.is_discarded() && doc.contains("dataset")) {
        mode = doc["dataset"].value("mode", mode);
        seed = doc["dataset"].value("master_seed", seed);
      }
    }
  }

  EvaluateOutputs out;
  Manifest manifest(options.output_dir);
  manifest.add_command(options.write_report ? "evaluate" : "export-scatter");
  try {
    out.evaluation = evaluate(encoder, options.alphas, mode, seed);
  } catch (const DegenerateInputError& e) {
    manifest.set("evaluation_failure", e.what());
    manifest.save();
    throw;
  }

  if (options.write_report) {
    out.report_csv = options.output_dir / "report.csv";
    auto f = open_out(out.report_csv);
    write_report_csv(f, out.evaluation.reports);
  }
  if (options.write_scatter) {
    out.scatter_csv = options.output_dir / "scatter.csv";
    out.scatter_svg = options.output_dir / "scatter.svg";
    auto c = open_out(out.scatter_csv);
    write_scatter_csv(c, out.evaluation);
    auto s = open_out(out.scatter_svg);
    write_scatter_svg(s, out.evaluation);
  }

  const auto& a = out.evaluation.alignment;
  manifest.set("alignment", {{"A", {{a.A(0, 0), a.A(0, 1)}, {a.A(1, 0), a.A(1, 1)}, {a.A(2, 0), a.A(2, 1)}}},
                             {"residual", a.residual},
                             {"N", out.evaluation.sample.size()}});
  if (!options.forward_model_stub) manifest.set("checkpoint", {{"path", options.checkpoint.string()},
                                                               {"sha256", sha256_file(options.checkpoint)}});
  for (const auto& p : {out.report_csv, out.scatter_csv, out.scatter_svg})
    if (!p.empty()) manifest.add_file(p);
  manifest.add_timing(options.write_report ? "evaluate" : "export-scatter", seconds_since(t0));
  manifest.save();
  return out;
}

VerifyOutputs cmd_verify(const std::string& suite, std::uint64_t seed, std::size_t trials, const fs::path& output_dir) {
  const auto t0 = Clock::now();
  VerifyOutputs out{output_dir / ("verify_" + suite + ".csv"), run_suite(suite, seed, trials)};
  fs::create_directories(output_dir);
  {
    auto f = open_out(out.csv);
    write_verification_csv(f, out.report.rows);
  }
  Manifest manifest(output_dir);
  manifest.add_command("verify " + suite);
  manifest.set("verify_" + suite, {{"seed", seed}, {"trials", trials}, {"ok", out.report.ok},
                                   {"summary", out.report.summary}});
  manifest.add_file(out.csv);
  manifest.add_timing("verify_" + suite, seconds_since(t0));
  manifest.save();
  return out;
}

std::vector<std::uint64_t> experiment_seeds(const RunConfig& config) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < config.seed_count; ++k) seeds.push_back(config.seed + k);
  return seeds;
}

RunSummary run_pipeline(const RunConfig& config, ExplorationMode mode, std::uint64_t seed, const fs::path& run_dir,
                        unsigned collect_workers, bool verbose) {
  const auto t0 = Clock::now();
  RunSummary run;
  run.mode = mode;
  run.seed = seed;
  try {
    fs::create_directories(run_dir);
    // Environments derive from the run seed, so modes with equal seeds share rooms.
    const Dataset data = collect(mode, config.env_count, config.per_env, seed, collect_workers);
    run.dataset_digest = dataset_digest(data);
    if (config.keep_datasets) {
      auto f = open_out(run_dir / "dataset.smds", true);
      write_dataset(f, data);
      auto p = open_out(run_dir / "dataset.smpr", true);
      write_provenance(p, data);
    }
    run.constant_baseline_loss = constant_predictor_loss(data);

    RunConfig run_config = config;
    run_config.mode = mode;
    run_config.seed = seed;
    run_config.train.seed = seed;
    const std::string tag = std::string(to_string(mode)) + "-s" + std::to_string(seed);
    const auto result = train(data, run_config.train, [&](std::size_t epoch, double loss) {
      if (verbose) std::clog << "[" << tag << "] epoch " << epoch + 1 << " loss " << fmt(loss, "%.6g") << std::endl;
    });
    run.final_loss = result.loss_curve.empty() ? 0.0 : result.loss_curve.back();
    write_checkpoint_files(run_dir / "model.smnn", run_dir / "model.json", result.net, run_config, data,
                           result.loss_curve);
    write_loss_csv(run_dir / "loss.csv", result.loss_curve);
    run.checkpoint_digest = sha256_file(run_dir / "model.smnn");

    const auto encoder = encoder_from(result.net.encoder);
    const auto ev = evaluate(encoder, config.alphas, std::string(to_string(mode)), seed);
    run.reports = ev.reports;
    {
      auto f = open_out(run_dir / "report.csv");
      write_report_csv(f, ev.reports);
    }
    run.distractor = distractor_sensitivity(encoder);
    run.ok = true;
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = seconds_since(t0);
  return run;
}

std::vector<StatsRow> aggregate(const std::vector<RunSummary>& runs, const std::vector<ExplorationMode>& modes,
                                const std::vector<double>& alphas) {
  std::vector<StatsRow> rows;
  for (auto mode : modes) {
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      std::vector<double> values;
      for (const auto& r : runs)
        if (r.ok && r.mode == mode && a < r.reports.size()) values.push_back(r.reports[a].D);
      StatsRow row{mode, alphas[a], values.size()};
      if (!values.empty()) {
        row.median = median(values);
        row.q1 = quantile(values, 0.25);
        row.q3 = quantile(values, 0.75);
        row.min = quantile(values, 0.0);
        row.max = quantile(values, 1.0);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

ExperimentOutputs cmd_experiment(const RunConfig& config, bool verbose) {
  const auto t0 = Clock::now();
  const auto root = config.output_dir;
  fs::create_directories(root / "runs");

  struct Task {
    ExplorationMode mode;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (auto mode : config.modes)
    for (auto seed : experiment_seeds(config)) tasks.push_back({mode, seed});

  const auto run_dir = [&](const Task& t) {
    return root / "runs" / (std::string(to_string(t.mode)) + "-s" + std::to_string(t.seed));
  };

  ExperimentOutputs out;
  out.runs.resize(tasks.size());
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(default_worker_count(), tasks.size()));
  std::mutex log_mutex;
  auto execute = [&](std::size_t i) {
    out.runs[i] = run_pipeline(config, tasks[i].mode, tasks[i].seed, run_dir(tasks[i]), workers > 1 ? 1 : 0, verbose);
    const std::lock_guard lock(log_mutex);
    const auto& r = out.runs[i];
    std::clog << "run " << to_string(r.mode) << " seed " << r.seed << ": "
              << (r.ok ? "ok" : "FAILED: " + r.error);
    for (const auto& rep : r.reports) std::clog << "  D_" << fmt(rep.alpha, "%g") << "=" << fmt(rep.D, "%.4f");
    std::clog << "  (" << fmt(r.seconds, "%.1f") << " s)" << std::endl;
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) execute(i);
      });
  }

  out.stats = aggregate(out.runs, config.modes, config.alphas);

  out.stats_csv = root / "stats.csv";
  {
    auto f = open_out(out.stats_csv);
    f << "mode,alpha,runs,median,q1,q3,min,max\n";
    for (const auto& s : out.stats)
      f << to_string(s.mode) << ',' << fmt(s.alpha) << ',' << s.runs << ',' << fmt(s.median) << ',' << fmt(s.q1)
        << ',' << fmt(s.q3) << ',' << fmt(s.min) << ',' << fmt(s.max) << '\n';
  }
  out.reports_csv = root / "reports.csv";
  {
    auto f = open_out(out.reports_csv);
    std::vector<DissimilarityReport> all;
    for (const auto& r : out.runs) all.insert(all.end(), r.reports.begin(), r.reports.end());
    write_report_csv(f, all);
  }
  out.runs_csv = root / "runs.csv";
  {
    auto f = open_out(out.runs_csv);
    f << "mode,seed,status,final_loss,constant_baseline_loss,distractor_mean_shift,distractor_rms_spread,"
         "distractor_ratio,dataset_sha256,checkpoint_sha256\n";
    for (const auto& r : out.runs) {
      std::string status = r.ok ? "ok" : "failed: " + r.error;
      for (char& c : status)
        if (c == ',' || c == '\n') c = ';';
      f << to_string(r.mode) << ',' << r.seed << ',' << status << ',' << fmt(r.final_loss) << ','
        << fmt(r.constant_baseline_loss) << ',' << fmt(r.distractor.mean_shift) << ','
        << fmt(r.distractor.rms_spread) << ',' << fmt(r.distractor.ratio()) << ',' << r.dataset_digest << ','
        << r.checkpoint_digest << '\n';
    }
  }

  Manifest manifest(root);
  manifest.add_command("experiment");
  manifest.set("experiment", to_json(config));
  manifest.set("environment_seeds_policy", "derived from each run seed; equal seeds share environments across modes");
  nlohmann::json datasets = nlohmann::json::object();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto dir = run_dir(tasks[i]);
    for (const char* name : {"model.smnn", "model.json", "loss.csv", "report.csv", "dataset.smds", "dataset.smpr"})
      if (fs::exists(dir / name)) manifest.add_file(dir / name);
    datasets[fs::relative(dir, root).generic_string()] = out.runs[i].dataset_digest;
    manifest.add_timing(fs::relative(dir, root).generic_string(), out.runs[i].seconds);
  }
  manifest.set("dataset_sha256", datasets);
  manifest.add_file(out.stats_csv);
  manifest.add_file(out.reports_csv);
  manifest.add_file(out.runs_csv);
  manifest.add_timing("experiment", seconds_since(t0));
  manifest.save();
  return out;
}

}  // namespace smrep::app
