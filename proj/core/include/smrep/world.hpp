#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "smrep/kinematics.hpp"

namespace smrep {

using Rgb = std::array<double, 3>;

inline constexpr std::size_t kImageSide = 16;
inline constexpr std::size_t kSensoryDim = kImageSide * kImageSide * 3;

/// Default generation parameters.
inline constexpr double kRoomSide = 10.0;
inline constexpr std::size_t kGridCells = 20;
inline constexpr double kMinRadius = 0.1;
inline constexpr double kMaxRadius = 0.3;
/// Side length of the floor patch seen by the camera.
inline constexpr double kCameraFootprint = 1.0;
inline constexpr Rgb kDefaultBackground{0.5, 0.5, 0.5};

struct SceneObject {
  Vec2 center;
  double radius = 0.0;
  Rgb color{};
  std::uint32_t z_order = 0;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Procedural room: a toroidal floor covered by coloured disks.
struct EnvironmentSpec {
  std::uint64_t seed = 0;
  double room_side = kRoomSide;
  std::vector<SceneObject> objects;
  Rgb background = kDefaultBackground;

  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

/// Position of the agent's base in the room frame, wrapped to [0, room_side)^2.
struct BasePose {
  double bx = 0.0;
  double by = 0.0;

  friend bool operator==(const BasePose&, const BasePose&) = default;
};

/// 16x16 RGB image, row-major with interleaved channels: index (v * 16 + u) * 3 + c,
/// where u indexes the x offset and v the y offset of the pixel's floor sample.
using SensoryState = std::array<double, kSensoryDim>;

/// Wrap a coordinate into [0, side).
double wrap_coordinate(double v, double side);
Vec2 wrap_point(Vec2 p, double side);
/// Shortest signed difference a - b on a circle of circumference `side`.
double toroidal_delta(double a, double b, double side);

BasePose make_base(Vec2 position, double room_side = kRoomSide);
/// base + delta, wrapped.
BasePose offset_base(const BasePose& base, PlanarVector delta, double room_side = kRoomSide);

/// Deterministic room for `seed`. One disk per cell of a 20x20 grid over a 10x10
/// room. Per cell, in row-major cell order (y outer, x inner), the stream yields:
/// x jitter, y jitter, radius, red, green, blue, z_order.
EnvironmentSpec generate_environment(std::uint64_t seed);

/// ε - δ: every object center translated by -delta and wrapped.
EnvironmentSpec shift_environment(const EnvironmentSpec& env, PlanarVector delta);

/// Floor point sampled by pixel (u, v) when the camera is above world point w.
Vec2 pixel_sample_point(Vec2 w, std::size_t u, std::size_t v);

/// Environment with a bucket index for fast point queries. Immutable once built.
class Scene {
 public:
  explicit Scene(EnvironmentSpec env);

  const EnvironmentSpec& spec() const { return env_; }

  /// Colour at a floor point (wrapped internally): highest z_order disk containing
  /// the point, ties going to the later object, else the background.
  Rgb color_at(Vec2 point) const;

  /// True iff some disk boundary lies within `margin` of the point.
  bool near_boundary(Vec2 point, double margin) const;

  /// Camera image above base + p.
  SensoryState render(const BasePose& base, const SensorPosition& p) const;

  /// Per-pixel flags for pixels whose sample point is within `margin` of a disk edge.
  std::array<bool, kImageSide * kImageSide> boundary_mask(const BasePose& base, const SensorPosition& p,
                                                          double margin) const;

 private:
  template <typename Visit>
  void for_each_candidate(Vec2 wrapped, Visit&& visit) const;

  EnvironmentSpec env_;
  std::size_t buckets_per_side_ = 1;
  double bucket_side_ = 1.0;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

/// Convenience wrapper building a Scene per call.
SensoryState render(const EnvironmentSpec& env, const BasePose& base, const SensorPosition& p);

/// Binary form: "SMEV", u32 version=1, u64 seed, f64 room_side, u32 count, then per
/// object cx, cy, r, red, green, blue as f64 and z as u32. Little-endian. The
/// background colour is not part of the format; readers restore kDefaultBackground.
void write_environment(std::ostream& out, const EnvironmentSpec& env);
EnvironmentSpec read_environment(std::istream& in);

}  // namespace smrep
