#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "app/commands.hpp"
#include "app/config.hpp"
#include "app/manifest.hpp"
#include "smrep/error.hpp"

namespace {

using namespace smrep;
using namespace smrep::app;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Thrown for invalid option values; mapped to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto out = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UsageError(key + ": expected a non-negative integer, got \"" + v + "\"");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw UsageError(key + ": expected a number, got \"" + v + "\"");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw UsageError(key + ": expected a boolean, got \"" + v + "\"");
}

/// Keys accepted in a --config file and as --key overrides.
const std::vector<std::string> kConfigKeys{"preset",        "mode",  "env_count", "per_env",    "seed",
                                           "epochs",        "batch_size", "learning_rate", "train_seed",
                                           "alphas",        "output_dir", "modes",     "seeds",
                                           "keep_datasets"};

/// Settings gathered from a config file and the command line; the command line wins.
struct Settings {
  std::string config_file;
  std::map<std::string, std::string> cli;

  void add_options(CLI::App& cmd, const std::vector<std::string>& keys) {
    cmd.add_option("--config", config_file, "key=value file; command-line options override it");
    for (const auto& key : keys) {
      std::string flag = "--" + key;
      for (char& c : flag)
        if (c == '_') c = '-';
      cmd.add_option(flag, cli[key], key)->type_name("VALUE");
    }
  }

  RunConfig resolve(CLI::App& cmd) const {
    std::map<std::string, std::string> values;
    if (!config_file.empty()) {
      values = read_key_value_file(config_file);
      for (const auto& [key, v] : values)
        if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
          throw UsageError(config_file + ": unknown key \"" + key + "\"");
    }
    for (const auto& [key, v] : cli) {
      std::string flag = "--" + key;
      for (char& c : flag)
        if (c == '_') c = '-';
      if (cmd.count(flag) > 0) values[key] = v;
    }

    RunConfig config;
    try {
      if (auto it = values.find("preset"); it != values.end()) apply_preset(config, it->second);
      bool train_seed_given = false;
      for (const auto& [key, v] : values) {
        if (key == "preset") continue;
        if (key == "mode") config.mode = parse_mode(v);
        else if (key == "env_count") config.env_count = to_u64(key, v);
        else if (key == "per_env") config.per_env = to_u64(key, v);
        else if (key == "seed") config.seed = to_u64(key, v);
        else if (key == "epochs") config.train.epochs = to_u64(key, v);
        else if (key == "batch_size") config.train.batch_size = to_u64(key, v);
        else if (key == "learning_rate") config.train.learning_rate = to_double(key, v);
        else if (key == "train_seed") config.train.seed = to_u64(key, v), train_seed_given = true;
        else if (key == "alphas") config.alphas = parse_number_list(v);
        else if (key == "output_dir") config.output_dir = v;
        else if (key == "modes") config.modes = parse_mode_list(v);
        else if (key == "seeds") config.seed_count = to_u64(key, v);
        else if (key == "keep_datasets") config.keep_datasets = to_bool(key, v);
      }
      if (!train_seed_given) config.train.seed = config.seed;
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("invalid value: ") + e.what());
    }
    if (config.env_count == 0 || config.per_env == 0) throw UsageError("env_count and per_env must be positive");
    if (config.train.batch_size == 0) throw UsageError("batch_size must be positive");
    if (!(config.train.learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
    if (config.seed_count == 0) throw UsageError("seeds must be positive");
    for (double a : config.alphas)
      if (!(a >= 0.0)) throw UsageError("alphas must be non-negative");
    return config;
  }
};

void print_loss(const std::vector<double>& curve) {
  if (!curve.empty()) std::cout << "final mean loss " << curve.back() << " after " << curve.size() << " epochs\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensorimotor prediction simulator and experiment runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kSoftwareVersion));

  const std::vector<std::string> data_keys{"preset", "mode", "env_count", "per_env", "seed", "output_dir"};
  const std::vector<std::string> train_keys{"preset", "epochs", "batch_size", "learning_rate", "seed", "train_seed",
                                            "output_dir"};

  Settings gen_settings;
  auto* gen = app.add_subcommand("generate", "Collect a dataset (dataset.smds + dataset.smpr)");
  gen_settings.add_options(*gen, data_keys);

  Settings train_settings;
  std::string train_dataset;
  auto* trn = app.add_subcommand("train", "Train both networks on a dataset");
  trn->add_option("dataset", train_dataset, "SMDS file")->required();
  train_settings.add_options(*trn, train_keys);

  EvaluateOptions eval_opts;
  std::string eval_checkpoint, eval_alphas = "0,10", eval_out = "out";
  auto add_eval = [&](CLI::App* cmd, bool with_alphas) {
    cmd->add_option("checkpoint", eval_checkpoint, "SMNN checkpoint");
    cmd->add_flag("--forward-model", eval_opts.forward_model_stub, "use the true forward model h = (x, y, 0)");
    if (with_alphas) cmd->add_option("--alphas", eval_alphas, "comma-separated alpha values");
    cmd->add_option("--output-dir", eval_out, "output directory");
  };
  auto* evl = app.add_subcommand("evaluate", "Evaluate a checkpoint (report.csv, scatter.csv, scatter.svg)");
  add_eval(evl, true);
  auto* sct = app.add_subcommand("export-scatter", "Write only the scatter CSV and SVG for a checkpoint");
  add_eval(sct, false);

  std::string suite;
  std::uint64_t verify_seed = 0;
  std::size_t verify_trials = 100;
  std::string verify_out = "out";
  auto* ver = app.add_subcommand("verify", "Run a verification suite");
  ver->add_option("suite", suite, "compensability | position-class | metric-class | gradients | dalpha-oracle")
      ->required();
  ver->add_option("--seed", verify_seed, "seed");
  ver->add_option("--trials", verify_trials, "number of trials");
  ver->add_option("--output-dir", verify_out, "output directory");

  Settings exp_settings;
  bool verbose = false;
  auto* exp = app.add_subcommand("experiment", "Run the pipeline for every (mode, seed) and aggregate");
  exp_settings.add_options(*exp, {"preset", "modes", "seeds", "seed", "env_count", "per_env", "epochs", "batch_size",
                                  "learning_rate", "alphas", "output_dir", "keep_datasets"});
  exp->add_flag("-v,--verbose", verbose, "log per-epoch losses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const auto config = gen_settings.resolve(*gen);
      const auto out = cmd_generate(config);
      std::cout << "wrote " << out.records << " transitions to " << out.dataset.string() << '\n';
    } else if (trn->parsed()) {
      const auto config = train_settings.resolve(*trn);
      const auto out = cmd_train(config, train_dataset);
      print_loss(out.loss_curve);
      std::cout << "wrote " << out.checkpoint.string() << '\n';
    } else if (evl->parsed() || sct->parsed()) {
      eval_opts.checkpoint = eval_checkpoint;
      eval_opts.output_dir = eval_out;
      if (eval_checkpoint.empty() && !eval_opts.forward_model_stub)
        throw UsageError("a checkpoint or --forward-model is required");
      try {
        eval_opts.alphas = parse_number_list(eval_alphas);
      } catch (const std::exception& e) {
        throw UsageError(std::string("--alphas: ") + e.what());
      }
      eval_opts.write_report = evl->parsed();
      try {
        const auto out = cmd_evaluate(eval_opts);
        for (const auto& r : out.evaluation.reports) std::cout << "D_" << r.alpha << " = " << r.D << '\n';
      } catch (const DegenerateInputError& e) {
        std::cerr << "evaluation failure: " << e.what() << '\n';
        return kExitRuntime;
      }
    } else if (ver->parsed()) {
      if (std::find(kSuiteNames.begin(), kSuiteNames.end(), suite) == kSuiteNames.end()) {
        std::cerr << "unknown suite \"" << suite << "\"\n";
        return kExitUsage;
      }
      const auto out = cmd_verify(suite, verify_seed, verify_trials, verify_out);
      for (const auto& line : out.report.summary) std::cout << line << '\n';
      std::cout << (out.report.ok ? "ok" : "FAILED") << " (" << out.csv.string() << ")\n";
      return out.report.ok ? 0 : kExitRuntime;
    } else if (exp->parsed()) {
      const auto config = exp_settings.resolve(*exp);
      const auto out = cmd_experiment(config, verbose);
      std::size_t failed = 0;
      for (const auto& r : out.runs) failed += r.ok ? 0 : 1;
      std::cout << "mode,alpha,runs,median,q1,q3\n";
      for (const auto& s : out.stats)
        std::cout << to_string(s.mode) << ',' << s.alpha << ',' << s.runs << ',' << s.median << ',' << s.q1 << ','
                  << s.q3 << '\n';
      std::cout << "wrote " << out.stats_csv.string() << '\n';
      if (failed > 0) {
        std::cerr << failed << " of " << out.runs.size() << " runs failed (see runs.csv)\n";
        return kExitRuntime;
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
