#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "smrep/explorer.hpp"
#include "smrep/neuralnet.hpp"

namespace smrep::app {

/// Everything a pipeline run depends on. Defaults mirror the full-size experiment.
struct RunConfig {
  ExplorationMode mode = ExplorationMode::Nominal;
  std::size_t env_count = 10;
  std::size_t per_env = 10000;
  std::uint64_t seed = 0;
  TrainConfig train;
  std::vector<double> alphas{0.0, 10.0};
  std::filesystem::path output_dir = "out";

  // experiment only
  std::vector<ExplorationMode> modes{ExplorationMode::Nominal, ExplorationMode::Dynamic, ExplorationMode::Static};
  std::size_t seed_count = 30;
  bool keep_datasets = false;

  std::string preset = "full";
};

/// "full": 10 envs x 10000, 50 epochs, 30 seeds. "small": 3 envs x 2000, 20 epochs, 5 seeds.
/// Throws DomainError for unknown names.
void apply_preset(RunConfig& config, const std::string& preset);

/// Parses a plain key=value file; blank lines and lines starting with '#' are skipped.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

std::vector<double> parse_number_list(const std::string& text);
std::vector<ExplorationMode> parse_mode_list(const std::string& text);

}  // namespace smrep::app
