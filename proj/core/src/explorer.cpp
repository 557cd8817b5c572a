#include "smrep/explorer.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "smrep/binary_io.hpp"
#include "smrep/error.hpp"
#include "smrep/rng.hpp"

namespace smrep {

namespace {

constexpr std::uint32_t kDatasetFormatVersion = 1;
constexpr std::uint32_t kProvenanceFormatVersion = 1;

// Stream indices under the master seed: even for environments, odd for sampling.
std::uint64_t sampling_seed(std::uint64_t master_seed, std::size_t env_index) {
  return derive_seed(master_seed, 2 * static_cast<std::uint64_t>(env_index) + 1);
}

MotorState sample_motor(Rng& rng) {
  MotorState m;
  for (double& v : m.values) v = static_cast<double>(rng.uniform_float(-1.0f, 1.0f));
  return m;
}

BasePose sample_base(Rng& rng, double room_side) {
  const double x = rng.uniform(0.0, room_side);
  const double y = rng.uniform(0.0, room_side);
  return make_base({x, y}, room_side);
}

void store(float* dst, const MotorState& m_t, const SensoryState& s_t, const MotorState& m_next,
           const SensoryState& s_next) {
  for (std::size_t i = 0; i < kMotorDim; ++i) *dst++ = static_cast<float>(m_t[i]);
  for (double v : s_t) *dst++ = static_cast<float>(v);
  for (std::size_t i = 0; i < kMotorDim; ++i) *dst++ = static_cast<float>(m_next[i]);
  for (double v : s_next) *dst++ = static_cast<float>(v);
}

void collect_environment(ExplorationMode mode, std::size_t env_index, std::size_t per_env, std::uint64_t master_seed,
                         const ArmGeometry& geom, float* records, BaseRecord* bases) {
  const Scene scene(generate_environment(environment_seed(master_seed, env_index)));
  const double room = scene.spec().room_side;
  Rng rng(sampling_seed(master_seed, env_index));
  for (std::size_t k = 0; k < per_env; ++k) {
    BaseRecord b;
    switch (mode) {
      case ExplorationMode::Nominal:
        b.base_t = sample_base(rng, room);
        b.base_next = b.base_t;
        break;
      case ExplorationMode::Dynamic:
        b.base_t = sample_base(rng, room);
        b.base_next = sample_base(rng, room);
        break;
      case ExplorationMode::Static:
        b.base_t = static_base(room);
        b.base_next = b.base_t;
        break;
    }
    const MotorState m_t = sample_motor(rng);
    const MotorState m_next = sample_motor(rng);
    const SensoryState s_t = scene.render(b.base_t, forward(m_t, geom));
    const SensoryState s_next = scene.render(b.base_next, forward(m_next, geom));
    store(records + k * kRecordFloats, m_t, s_t, m_next, s_next);
    bases[k] = b;
  }
}

}  // namespace

std::string_view to_string(ExplorationMode mode) {
  switch (mode) {
    case ExplorationMode::Nominal: return "nominal";
    case ExplorationMode::Dynamic: return "dynamic";
    case ExplorationMode::Static: return "static";
  }
  return "unknown";
}

ExplorationMode parse_mode(std::string_view name) {
  if (name == "nominal") return ExplorationMode::Nominal;
  if (name == "dynamic") return ExplorationMode::Dynamic;
  if (name == "static") return ExplorationMode::Static;
  throw DomainError("unknown exploration mode \"" + std::string(name) + "\"");
}

Dataset::Dataset(DatasetProvenance provenance, std::vector<float> records)
    : provenance_(std::move(provenance)), records_(std::move(records)) {
  if (records_.size() % kRecordFloats != 0) throw DomainError("record buffer is not a whole number of transitions");
}

TransitionView Dataset::transition(std::size_t i) const {
  const float* r = records_.data() + i * kRecordFloats;
  return {std::span<const float, kMotorDim>(r, kMotorDim),
          std::span<const float, kSensoryDim>(r + kMotorDim, kSensoryDim),
          std::span<const float, kMotorDim>(r + kMotorDim + kSensoryDim, kMotorDim),
          std::span<const float, kSensoryDim>(r + 2 * kMotorDim + kSensoryDim, kSensoryDim)};
}

void Dataset::set_bases(std::vector<BaseRecord> bases) {
  if (!bases.empty() && bases.size() != size()) throw DomainError("base log length differs from transition count");
  bases_ = std::move(bases);
}

void Dataset::set_provenance(DatasetProvenance provenance) { provenance_ = std::move(provenance); }

std::uint64_t environment_seed(std::uint64_t master_seed, std::size_t env_index) {
  return derive_seed(master_seed, 2 * static_cast<std::uint64_t>(env_index));
}

BasePose static_base(double room_side) { return {room_side / 2.0, room_side / 2.0}; }

unsigned default_worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("SMSEED_THREADS")) {
    const long v = std::strtol(cap, nullptr, 10);
    if (v >= 1) n = std::min(n, static_cast<unsigned>(v));
  }
  return n;
}

Dataset collect(ExplorationMode mode, std::size_t env_count, std::size_t per_env, std::uint64_t master_seed,
                unsigned workers, const ArmGeometry& geom) {
  if (env_count < 1) throw DomainError("env_count must be at least 1");
  if (per_env < 1) throw DomainError("per_env must be at least 1");
  geom.validate();

  DatasetProvenance prov;
  prov.mode = mode;
  prov.master_seed = master_seed;
  prov.per_env = per_env;
  for (std::size_t e = 0; e < env_count; ++e) prov.environment_seeds.push_back(environment_seed(master_seed, e));

  const std::size_t n = env_count * per_env;
  std::vector<float> records(n * kRecordFloats);
  std::vector<BaseRecord> bases(n);

  if (workers == 0) workers = default_worker_count();
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, env_count));

  auto run = [&](std::size_t e) {
    collect_environment(mode, e, per_env, master_seed, geom, records.data() + e * per_env * kRecordFloats,
                        bases.data() + e * per_env);
  };

  if (workers <= 1) {
    for (std::size_t e = 0; e < env_count; ++e) run(e);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t e = next++; e < env_count; e = next++) {
            try {
              run(e);
            } catch (...) {
              const std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  Dataset data(std::move(prov), std::move(records));
  data.set_bases(std::move(bases));
  return data;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  io::BinaryWriter w(out);
  w.magic("SMDS");
  w.u32(kDatasetFormatVersion);
  w.u8(static_cast<std::uint8_t>(data.provenance().mode));
  w.u64(data.provenance().master_seed);
  w.u64(data.size());
  w.u32(static_cast<std::uint32_t>(kMotorDim));
  w.u32(static_cast<std::uint32_t>(kSensoryDim));
  w.f32_array(data.records().data(), data.records().size());
}

Dataset read_dataset(std::istream& in) {
  io::BinaryReader r(in, "dataset file");
  r.expect_magic("SMDS");
  r.expect_u32(kDatasetFormatVersion, "version");
  DatasetProvenance prov;
  const auto mode_at = r.offset();
  const std::uint8_t mode = r.u8();
  if (mode > 2) r.fail(mode_at, "invalid exploration mode " + std::to_string(mode));
  prov.mode = static_cast<ExplorationMode>(mode);
  prov.master_seed = r.u64();
  const std::uint64_t n = r.u64();
  r.expect_u32(static_cast<std::uint32_t>(kMotorDim), "motor_dim");
  r.expect_u32(static_cast<std::uint32_t>(kSensoryDim), "sensory_dim");
  std::vector<float> records(n * kRecordFloats);
  r.f32_array(records.data(), records.size());
  r.expect_end();
  return Dataset(std::move(prov), std::move(records));
}

void write_provenance(std::ostream& out, const Dataset& data) {
  const auto& prov = data.provenance();
  io::BinaryWriter w(out);
  w.magic("SMPR");
  w.u32(kProvenanceFormatVersion);
  w.u8(static_cast<std::uint8_t>(prov.mode));
  w.u64(prov.master_seed);
  w.u32(static_cast<std::uint32_t>(prov.environment_seeds.size()));
  w.u64(prov.per_env);
  for (auto s : prov.environment_seeds) w.u64(s);
  w.u64(data.bases().size());
  for (const auto& b : data.bases()) {
    w.f64(b.base_t.bx);
    w.f64(b.base_t.by);
    w.f64(b.base_next.bx);
    w.f64(b.base_next.by);
  }
}

void read_provenance(std::istream& in, Dataset& data) {
  io::BinaryReader r(in, "provenance file");
  r.expect_magic("SMPR");
  r.expect_u32(kProvenanceFormatVersion, "version");
  DatasetProvenance prov;
  const auto mode_at = r.offset();
  const std::uint8_t mode = r.u8();
  if (mode != static_cast<std::uint8_t>(data.provenance().mode)) r.fail(mode_at, "mode differs from dataset");
  prov.mode = static_cast<ExplorationMode>(mode);
  const auto seed_at = r.offset();
  prov.master_seed = r.u64();
  if (prov.master_seed != data.provenance().master_seed) r.fail(seed_at, "master seed differs from dataset");
  const std::uint32_t env_count = r.u32();
  prov.per_env = r.u64();
  for (std::uint32_t e = 0; e < env_count; ++e) prov.environment_seeds.push_back(r.u64());
  const auto n_at = r.offset();
  const std::uint64_t n = r.u64();
  if (n != data.size()) r.fail(n_at, "record count differs from dataset");
  std::vector<BaseRecord> bases(n);
  for (auto& b : bases) {
    b.base_t.bx = r.f64();
    b.base_t.by = r.f64();
    b.base_next.bx = r.f64();
    b.base_next.by = r.f64();
  }
  r.expect_end();
  data.set_provenance(std::move(prov));
  data.set_bases(std::move(bases));
}

}  // namespace smrep
