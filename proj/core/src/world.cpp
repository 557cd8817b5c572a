#include "smrep/world.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "smrep/binary_io.hpp"
#include "smrep/error.hpp"
#include "smrep/rng.hpp"

namespace smrep {

namespace {

constexpr std::uint32_t kEnvironmentFormatVersion = 1;
/// Bucket padding; boundary queries with larger margins are not supported.
constexpr double kBucketPad = 1e-3;
constexpr double kTargetBucketSide = 0.5;

}  // namespace

double wrap_coordinate(double v, double side) {
  double r = v - side * std::floor(v / side);
  // floor() can leave r == side for tiny negative v.
  if (r >= side || r < 0.0) r = 0.0;
  return r;
}

Vec2 wrap_point(Vec2 p, double side) { return {wrap_coordinate(p.x, side), wrap_coordinate(p.y, side)}; }

double toroidal_delta(double a, double b, double side) { return std::remainder(a - b, side); }

BasePose make_base(Vec2 position, double room_side) {
  const Vec2 w = wrap_point(position, room_side);
  return {w.x, w.y};
}

BasePose offset_base(const BasePose& base, PlanarVector delta, double room_side) {
  return make_base(Vec2{base.bx, base.by} + delta, room_side);
}

EnvironmentSpec generate_environment(std::uint64_t seed) {
  EnvironmentSpec env;
  env.seed = seed;
  env.room_side = kRoomSide;
  env.background = kDefaultBackground;
  env.objects.reserve(kGridCells * kGridCells);

  Rng rng(derive_seed(seed, 0));
  const double cell = kRoomSide / static_cast<double>(kGridCells);
  for (std::size_t iy = 0; iy < kGridCells; ++iy) {
    for (std::size_t ix = 0; ix < kGridCells; ++ix) {
      SceneObject obj;
      const double jx = rng.uniform(-0.5, 0.5);
      const double jy = rng.uniform(-0.5, 0.5);
      obj.center = wrap_point({(static_cast<double>(ix) + 0.5 + jx) * cell, (static_cast<double>(iy) + 0.5 + jy) * cell},
                              kRoomSide);
      obj.radius = rng.uniform(kMinRadius, kMaxRadius);
      for (double& c : obj.color) c = rng.uniform();
      obj.z_order = rng.next_u32();
      env.objects.push_back(obj);
    }
  }
  return env;
}

EnvironmentSpec shift_environment(const EnvironmentSpec& env, PlanarVector delta) {
  EnvironmentSpec out = env;
  if (delta == PlanarVector{}) return out;
  for (auto& obj : out.objects) obj.center = wrap_point(obj.center - delta, env.room_side);
  return out;
}

Vec2 pixel_sample_point(Vec2 w, std::size_t u, std::size_t v) {
  constexpr double n = static_cast<double>(kImageSide);
  return {w.x + kCameraFootprint * ((static_cast<double>(u) + 0.5) / n - 0.5),
          w.y + kCameraFootprint * ((static_cast<double>(v) + 0.5) / n - 0.5)};
}

Scene::Scene(EnvironmentSpec env) : env_(std::move(env)) {
  if (!(env_.room_side > 0.0)) throw DomainError("room side must be positive");
  buckets_per_side_ = std::max<std::size_t>(1, static_cast<std::size_t>(env_.room_side / kTargetBucketSide));
  bucket_side_ = env_.room_side / static_cast<double>(buckets_per_side_);
  buckets_.assign(buckets_per_side_ * buckets_per_side_, {});

  const auto n = static_cast<long>(buckets_per_side_);
  auto bucket_range = [&](double center, double extent) {
    long lo = static_cast<long>(std::floor((center - extent) / bucket_side_));
    long hi = static_cast<long>(std::floor((center + extent) / bucket_side_));
    if (hi - lo + 1 >= n) {
      lo = 0;
      hi = n - 1;
    }
    return std::pair{lo, hi};
  };
  auto wrap_index = [n](long i) { return static_cast<std::size_t>(((i % n) + n) % n); };

  for (std::uint32_t idx = 0; idx < env_.objects.size(); ++idx) {
    const auto& obj = env_.objects[idx];
    if (!(obj.radius > 0.0)) continue;
    const double extent = obj.radius + kBucketPad;
    const auto [x0, x1] = bucket_range(obj.center.x, extent);
    const auto [y0, y1] = bucket_range(obj.center.y, extent);
    for (long by = y0; by <= y1; ++by)
      for (long bx = x0; bx <= x1; ++bx) buckets_[wrap_index(by) * buckets_per_side_ + wrap_index(bx)].push_back(idx);
  }
}

template <typename Visit>
void Scene::for_each_candidate(Vec2 wrapped, Visit&& visit) const {
  const auto clamp_index = [this](double v) {
    return std::min(buckets_per_side_ - 1, static_cast<std::size_t>(v / bucket_side_));
  };
  const auto& bucket = buckets_[clamp_index(wrapped.y) * buckets_per_side_ + clamp_index(wrapped.x)];
  for (std::uint32_t idx : bucket) visit(idx, env_.objects[idx]);
}

Rgb Scene::color_at(Vec2 point) const {
  const Vec2 q = wrap_point(point, env_.room_side);
  const SceneObject* best = nullptr;
  for_each_candidate(q, [&](std::uint32_t, const SceneObject& obj) {
    const double dx = toroidal_delta(q.x, obj.center.x, env_.room_side);
    const double dy = toroidal_delta(q.y, obj.center.y, env_.room_side);
    if (dx * dx + dy * dy < obj.radius * obj.radius) {
      // Buckets list objects in index order, so >= lets later objects win ties.
      if (best == nullptr || obj.z_order >= best->z_order) best = &obj;
    }
  });
  return best ? best->color : env_.background;
}

bool Scene::near_boundary(Vec2 point, double margin) const {
  if (margin > kBucketPad) throw DomainError("boundary margin exceeds the scene index padding");
  const Vec2 q = wrap_point(point, env_.room_side);
  bool hit = false;
  for_each_candidate(q, [&](std::uint32_t, const SceneObject& obj) {
    const double dx = toroidal_delta(q.x, obj.center.x, env_.room_side);
    const double dy = toroidal_delta(q.y, obj.center.y, env_.room_side);
    if (std::abs(std::hypot(dx, dy) - obj.radius) <= margin) hit = true;
  });
  return hit;
}

SensoryState Scene::render(const BasePose& base, const SensorPosition& p) const {
  SensoryState image{};
  const Vec2 w{base.bx + p.x, base.by + p.y};
  for (std::size_t v = 0; v < kImageSide; ++v) {
    for (std::size_t u = 0; u < kImageSide; ++u) {
      const Rgb c = color_at(pixel_sample_point(w, u, v));
      const std::size_t at = (v * kImageSide + u) * 3;
      image[at] = c[0];
      image[at + 1] = c[1];
      image[at + 2] = c[2];
    }
  }
  return image;
}

std::array<bool, kImageSide * kImageSide> Scene::boundary_mask(const BasePose& base, const SensorPosition& p,
                                                               double margin) const {
  std::array<bool, kImageSide * kImageSide> mask{};
  const Vec2 w{base.bx + p.x, base.by + p.y};
  for (std::size_t v = 0; v < kImageSide; ++v)
    for (std::size_t u = 0; u < kImageSide; ++u) mask[v * kImageSide + u] = near_boundary(pixel_sample_point(w, u, v), margin);
  return mask;
}

SensoryState render(const EnvironmentSpec& env, const BasePose& base, const SensorPosition& p) {
  return Scene(env).render(base, p);
}

void write_environment(std::ostream& out, const EnvironmentSpec& env) {
  io::BinaryWriter w(out);
  w.magic("SMEV");
  w.u32(kEnvironmentFormatVersion);
  w.u64(env.seed);
  w.f64(env.room_side);
  w.u32(static_cast<std::uint32_t>(env.objects.size()));
  for (const auto& obj : env.objects) {
    w.f64(obj.center.x);
    w.f64(obj.center.y);
    w.f64(obj.radius);
    for (double c : obj.color) w.f64(c);
    w.u32(obj.z_order);
  }
}

EnvironmentSpec read_environment(std::istream& in) {
  io::BinaryReader r(in, "environment file");
  r.expect_magic("SMEV");
  r.expect_u32(kEnvironmentFormatVersion, "version");
  EnvironmentSpec env;
  env.seed = r.u64();
  env.room_side = r.f64();
  const std::uint32_t count = r.u32();
  env.objects.resize(count);
  for (auto& obj : env.objects) {
    obj.center.x = r.f64();
    obj.center.y = r.f64();
    obj.radius = r.f64();
    for (double& c : obj.color) c = r.f64();
    obj.z_order = r.u32();
  }
  return env;
}

}  // namespace smrep
