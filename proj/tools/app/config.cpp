#include "app/config.hpp"

#include <fstream>
#include <sstream>

#include "smrep/error.hpp"

namespace smrep::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void apply_preset(RunConfig& config, const std::string& preset) {
  if (preset == "full") {
    config.env_count = 10;
    config.per_env = 10000;
    config.train.epochs = 50;
    config.seed_count = 30;
  } else if (preset == "small") {
    config.env_count = 3;
    config.per_env = 2000;
    config.train.epochs = 20;
    config.seed_count = 5;
  } else {
    throw DomainError("unknown preset \"" + preset + "\" (expected full or small)");
  }
  config.preset = preset;
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw DomainError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json modes = nlohmann::json::array();
  for (auto m : c.modes) modes.push_back(std::string(to_string(m)));
  return {
      {"preset", c.preset},
      {"mode", std::string(to_string(c.mode))},
      {"env_count", c.env_count},
      {"per_env", c.per_env},
      {"seed", c.seed},
      {"epochs", c.train.epochs},
      {"batch_size", c.train.batch_size},
      {"learning_rate", c.train.learning_rate},
      {"train_seed", c.train.seed},
      {"alphas", c.alphas},
      {"modes", modes},
      {"seed_count", c.seed_count},
      {"keep_datasets", c.keep_datasets},
  };
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_commas(text)) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw DomainError("not a number: \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

std::vector<ExplorationMode> parse_mode_list(const std::string& text) {
  std::vector<ExplorationMode> out;
  for (const auto& item : split_commas(text)) out.push_back(parse_mode(item));
  if (out.empty()) throw DomainError("mode list is empty");
  return out;
}

}  // namespace smrep::app
