#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smrep/kinematics.hpp"
#include "smrep/world.hpp"

namespace smrep {

enum class ExplorationMode : std::uint8_t { Nominal = 0, Dynamic = 1, Static = 2 };

std::string_view to_string(ExplorationMode mode);
/// Accepts "nominal", "dynamic", "static"; throws DomainError otherwise.
ExplorationMode parse_mode(std::string_view name);

/// Floats per stored record: m_t (4), s_t (768), m_next (4), s_next (768).
inline constexpr std::size_t kRecordFloats = 2 * (kMotorDim + kSensoryDim);

/// Read-only view of one stored transition.
struct TransitionView {
  std::span<const float, kMotorDim> motor_t;
  std::span<const float, kSensoryDim> sensory_t;
  std::span<const float, kMotorDim> motor_next;
  std::span<const float, kSensoryDim> sensory_next;
};

struct DatasetProvenance {
  ExplorationMode mode = ExplorationMode::Nominal;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> environment_seeds;
  std::uint64_t per_env = 0;

  friend bool operator==(const DatasetProvenance&, const DatasetProvenance&) = default;
};

/// Bases under which s_t and s_next of one record were rendered. Never shown to the learner.
struct BaseRecord {
  BasePose base_t;
  BasePose base_next;

  friend bool operator==(const BaseRecord&, const BaseRecord&) = default;
};

/// Transitions stored contiguously as float32 records in file order.
class Dataset {
 public:
  Dataset() = default;
  Dataset(DatasetProvenance provenance, std::vector<float> records);

  std::size_t size() const { return records_.size() / kRecordFloats; }
  bool empty() const { return records_.empty(); }
  TransitionView transition(std::size_t i) const;

  const DatasetProvenance& provenance() const { return provenance_; }
  void set_provenance(DatasetProvenance provenance);
  std::span<const float> records() const { return records_; }

  /// Per-record bases; present for generated datasets and after reading a sidecar.
  const std::vector<BaseRecord>& bases() const { return bases_; }
  void set_bases(std::vector<BaseRecord> bases);

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  DatasetProvenance provenance_;
  std::vector<float> records_;
  std::vector<BaseRecord> bases_;
};

/// Seed used to generate environment `env_index` of a dataset.
std::uint64_t environment_seed(std::uint64_t master_seed, std::size_t env_index);

/// Fixed base used by static exploration.
BasePose static_base(double room_side = kRoomSide);

/// Generates env_count * per_env transitions. Environment e is built from
/// environment_seed(master_seed, e) and sampled from its own derived stream, so the
/// output is identical for any worker count. Per transition the stream yields, in
/// order: base_t (nominal, dynamic), base_next (dynamic), m_t, m_next. Motor values
/// are drawn as float32-exact numbers so stored records re-render bit-identically.
/// `workers` = 0 uses default_worker_count().
Dataset collect(ExplorationMode mode, std::size_t env_count, std::size_t per_env, std::uint64_t master_seed,
                unsigned workers = 0, const ArmGeometry& geom = {});

/// Worker cap from SMSEED_THREADS, else hardware concurrency.
unsigned default_worker_count();

/// "SMDS" dataset format (little-endian): u32 version=1, u8 mode, u64 master_seed,
/// u64 n, u32 motor_dim=4, u32 sensory_dim=768, then n records of
/// m_t f32x4, s_t f32x768, m_next f32x4, s_next f32x768. Provenance beyond
/// mode/seed lives in the SMPR sidecar.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);

/// "SMPR" sidecar: u32 version=1, u8 mode, u64 master_seed, u32 env_count,
/// u64 per_env, u64 env seeds x env_count, u64 n, then n records of
/// base_t (bx, by) and base_next (bx, by) as f64.
void write_provenance(std::ostream& out, const Dataset& data);
/// Reads a sidecar and attaches it to `data`; throws FormatError on mismatch.
void read_provenance(std::istream& in, Dataset& data);

}  // namespace smrep
