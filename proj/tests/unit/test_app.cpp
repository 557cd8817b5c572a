#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "app/commands.hpp"
#include "app/config.hpp"
#include "app/manifest.hpp"
#include "smrep/error.hpp"

using namespace smrep;
using namespace smrep::app;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("smrep_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig tiny(const fs::path& dir) {
  RunConfig c;
  c.env_count = 2;
  c.per_env = 60;
  c.train.epochs = 2;
  c.train.batch_size = 32;
  c.output_dir = dir;
  c.seed_count = 2;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SMREP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(App, Sha256KnownVector) {
  EXPECT_EQ(sha256_string("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(App, Presets) {
  RunConfig c;
  EXPECT_EQ(c.env_count * c.per_env, 100000u);
  EXPECT_EQ(c.train.epochs, 50u);
  EXPECT_EQ(c.train.batch_size, 128u);
  EXPECT_EQ(c.alphas, (std::vector<double>{0.0, 10.0}));
  apply_preset(c, "small");
  EXPECT_EQ(c.env_count, 3u);
  EXPECT_EQ(c.per_env, 2000u);
  EXPECT_EQ(c.seed_count, 5u);
  EXPECT_THROW(apply_preset(c, "huge"), DomainError);
}

TEST(App, KeyValueFile) {
  const auto dir = scratch("kv");
  std::ofstream(dir / "c.txt") << "# comment\n\nseed = 4\nmodes=nominal,static\n";
  const auto kv = read_key_value_file(dir / "c.txt");
  EXPECT_EQ(kv.at("seed"), "4");
  EXPECT_EQ(parse_mode_list(kv.at("modes")).size(), 2u);
  std::ofstream(dir / "bad.txt") << "novalue\n";
  EXPECT_THROW(read_key_value_file(dir / "bad.txt"), DomainError);
}

TEST(App, GenerateTrainEvaluate) {
  const auto dir = scratch("pipeline");
  const auto config = tiny(dir);
  const auto gen = cmd_generate(config);
  EXPECT_EQ(gen.records, 120u);
  const auto first = sha256_file(gen.dataset);
  cmd_generate(config);
  EXPECT_EQ(sha256_file(gen.dataset), first);

  auto one_epoch = config;
  one_epoch.train.epochs = 1;
  const auto tr = cmd_train(one_epoch, gen.dataset);
  EXPECT_EQ(tr.loss_curve.size(), 1u);
  EXPECT_EQ(slurp(tr.loss_csv).substr(0, 16), "epoch,mean_loss\n");

  EvaluateOptions opts;
  opts.checkpoint = tr.checkpoint;
  opts.output_dir = dir;
  const auto ev = cmd_evaluate(opts);
  EXPECT_EQ(ev.evaluation.reports.size(), 2u);
  EXPECT_TRUE(fs::exists(ev.scatter_svg));
  EXPECT_EQ(slurp(ev.scatter_csv).substr(0, 34), "m1,m2,m3,h1,h2,h3,x,y,Ap1,Ap2,Ap3\n");

  // Every file the manifest lists exists with the recorded digest.
  std::ifstream mf(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(mf);
  ASSERT_TRUE(manifest.contains("files"));
  EXPECT_GE(manifest["files"].size(), 7u);
  for (const auto& [name, digest] : manifest["files"].items())
    EXPECT_EQ(sha256_file(dir / name), digest.get<std::string>()) << name;
  EXPECT_EQ(manifest["software"]["version"], std::string(kSoftwareVersion));
}

TEST(App, ForwardModelStubReport) {
  const auto dir = scratch("stub");
  EvaluateOptions opts;
  opts.forward_model_stub = true;
  opts.output_dir = dir;
  const auto ev = cmd_evaluate(opts);
  EXPECT_LT(ev.evaluation.reports[0].D, 1e-9);
  EXPECT_EQ(slurp(ev.report_csv).substr(0, 20), "mode,seed,alpha,D,N\n");
}

TEST(App, ExperimentBookkeepingAndDigests) {
  const auto a_dir = scratch("exp_a");
  const auto b_dir = scratch("exp_b");
  auto config = tiny(a_dir);
  const auto a = cmd_experiment(config);
  EXPECT_EQ(a.runs.size(), 6u);
  EXPECT_EQ(a.stats.size(), 6u);
  for (const auto& r : a.runs) EXPECT_TRUE(r.ok) << r.error;
  config.output_dir = b_dir;
  const auto b = cmd_experiment(config);
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].dataset_digest, b.runs[i].dataset_digest);
    EXPECT_EQ(a.runs[i].checkpoint_digest, b.runs[i].checkpoint_digest);
  }
  EXPECT_EQ(slurp(a.stats_csv), slurp(b.stats_csv));
  EXPECT_EQ(slurp(a_dir / "runs/static-s1/report.csv"), slurp(b_dir / "runs/static-s1/report.csv"));
  // Modes differ in how bases are drawn, so equal seeds still give distinct datasets.
  EXPECT_NE(a.runs[0].dataset_digest, a.runs[2].dataset_digest);
}

TEST(App, CliExitCodes) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("verify bogus"), 2);
  EXPECT_EQ(run_cli("generate --preset enormous --output-dir " + dir.string()), 2);
  EXPECT_EQ(run_cli("generate --env-count abc --output-dir " + dir.string()), 2);
  EXPECT_EQ(run_cli("train " + (dir / "missing.smds").string() + " --output-dir " + dir.string()), 1);
  EXPECT_EQ(run_cli("verify dalpha-oracle --trials 3 --output-dir " + dir.string()), 0);
  EXPECT_EQ(run_cli("evaluate --forward-model --output-dir " + dir.string()), 0);
  EXPECT_EQ(run_cli("generate --env-count 1 --per-env 10 --output-dir " + dir.string()), 0);

  std::string bytes = slurp(dir / "dataset.smds");
  bytes[0] = 'Q';
  std::ofstream(dir / "broken.smds", std::ios::binary) << bytes;
  EXPECT_EQ(run_cli("train " + (dir / "broken.smds").string() + " --output-dir " + dir.string()), 1);
}

TEST(App, ConfigFileWithOverride) {
  const auto dir = scratch("cfg");
  std::ofstream(dir / "run.cfg") << "env_count=1\nper_env=7\nseed=3\n";
  ASSERT_EQ(run_cli("generate --config " + (dir / "run.cfg").string() + " --per-env 5 --output-dir " +
                    dir.string()),
            0);
  std::ifstream in(dir / "dataset.smds", std::ios::binary);
  const auto data = read_dataset(in);
  EXPECT_EQ(data.size(), 5u);
  EXPECT_EQ(data.provenance().master_seed, 3u);
  std::ofstream(dir / "typo.cfg") << "env_cont=1\n";
  EXPECT_EQ(run_cli("generate --config " + (dir / "typo.cfg").string() + " --output-dir " + dir.string()), 2);
}
