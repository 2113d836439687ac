#pragma once

// Synthetic planar grasping world: textured oriented-rectangle objects, a
// geometric success oracle, and per-robot structured execution noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "rng.hpp"

namespace robust_grasp {

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool contains(const Rect& r) const { return r.x0 >= x0 && r.y0 >= y0 && r.x1 <= x1 && r.y1 <= y1; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct SimObject {
  double cx = 0, cy = 0;
  double major_axis_angle = 0;  // [0, pi)
  double half_major = 0;        // a
  double half_minor = 0;        // b <= a
  int texture_id = 0;

  // Object-frame coordinates of a scene point (u along the major axis).
  std::pair<double, double> to_local(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(major_axis_angle), s = std::sin(major_axis_angle);
    return {c * dx + s * dy, -s * dx + c * dy};
  }

  bool inside(double x, double y, double shrink = 0.0) const {
    auto [u, v] = to_local(x, y);
    return std::abs(u) <= half_major - shrink && std::abs(v) <= half_minor - shrink;
  }

  Rect bounding_box() const {
    const double c = std::abs(std::cos(major_axis_angle)), s = std::abs(std::sin(major_axis_angle));
    const double hx = half_major * c + half_minor * s;
    const double hy = half_major * s + half_minor * c;
    return {cx - hx, cy - hy, cx + hx, cy + hy};
  }

  double perpendicular_angle() const { return wrap_half_turn(major_axis_angle + kPi / 2); }
};

// Position-only execution error of one robot:
//   displacement(p) = (A - I)(p - c) + b + field(p)
// with c the scene center and field a low-order polynomial in normalized
// coordinates u, v in [-1, 1] with basis {u*v, u^2 - 1/2, v^2 - 1/2}.
struct NoiseTransform {
  int robot_id = 0;
  std::array<double, 4> affine{1, 0, 0, 1};  // row-major A
  std::array<double, 2> offset{0, 0};         // b, pixels
  std::array<double, 3> field_x{0, 0, 0};
  std::array<double, 3> field_y{0, 0, 0};
  double scene_size = 256;

  static constexpr std::array<double, 3> kBasisBound{1.0, 0.5, 0.5};

  std::array<double, 2> displacement(double x, double y) const {
    const double c = scene_size / 2;
    const double px = x - c, py = y - c;
    const double u = px / c, v = py / c;
    const std::array<double, 3> basis{u * v, u * u - 0.5, v * v - 0.5};
    double dx = (affine[0] - 1) * px + affine[1] * py + offset[0];
    double dy = affine[2] * px + (affine[3] - 1) * py + offset[1];
    for (int i = 0; i < 3; ++i) {
      dx += field_x[i] * basis[i];
      dy += field_y[i] * basis[i];
    }
    return {dx, dy};
  }

  // Upper bound of |displacement| over the scene square.
  double displacement_bound() const {
    const double c = scene_size / 2;
    double bx = std::abs(offset[0]) + (std::abs(affine[0] - 1) + std::abs(affine[1])) * c;
    double by = std::abs(offset[1]) + (std::abs(affine[2]) + std::abs(affine[3] - 1)) * c;
    for (int i = 0; i < 3; ++i) {
      bx += std::abs(field_x[i]) * kBasisBound[i];
      by += std::abs(field_y[i]) * kBasisBound[i];
    }
    return std::hypot(bx, by);
  }

  bool invertible() const { return std::abs(affine[0] * affine[3] - affine[1] * affine[2]) > 1e-9; }

  static NoiseTransform identity(int robot_id, double scene_size) {
    NoiseTransform t;
    t.robot_id = robot_id;
    t.scene_size = scene_size;
    return t;
  }

  friend bool operator==(const NoiseTransform&, const NoiseTransform&) = default;
};

struct WorldConfig {
  int scene_size = 256;
  int n_robots = 4;
  double max_noise = 12.0;
  double offset_min_frac = 0.6;  // |b| as a fraction of max_noise
  double offset_max_frac = 0.8;
  double direction_jitter_deg = 10.0;
  double affine_scale = 0.008;
  double field_scale = 1.5;
  int min_objects = 3;
  int max_objects = 6;
  double half_major_min = 14, half_major_max = 30;
  double half_minor_min = 9, half_minor_max = 16;
  double margin = 4.0;
  double angle_tolerance_deg = 15.0;
  int n_textures = 16;
  std::vector<int> textures{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  Rect zone{16, 16, 240, 240};
  std::uint64_t seed = 1;

  static WorldConfig from(const KeyValueConfig& kv) {
    WorldConfig c;
    c.scene_size = kv.get("scene_size", c.scene_size);
    c.n_robots = kv.get("n_robots", c.n_robots);
    c.max_noise = kv.get("max_noise", c.max_noise);
    c.offset_min_frac = kv.get("offset_min_frac", c.offset_min_frac);
    c.offset_max_frac = kv.get("offset_max_frac", c.offset_max_frac);
    c.direction_jitter_deg = kv.get("direction_jitter_deg", c.direction_jitter_deg);
    c.affine_scale = kv.get("affine_scale", c.affine_scale);
    c.field_scale = kv.get("field_scale", c.field_scale);
    c.min_objects = kv.get("min_objects", c.min_objects);
    c.max_objects = kv.get("max_objects", c.max_objects);
    c.half_major_min = kv.get("half_major_min", c.half_major_min);
    c.half_major_max = kv.get("half_major_max", c.half_major_max);
    c.half_minor_min = kv.get("half_minor_min", c.half_minor_min);
    c.half_minor_max = kv.get("half_minor_max", c.half_minor_max);
    c.margin = kv.get("margin", c.margin);
    c.angle_tolerance_deg = kv.get("angle_tolerance_deg", c.angle_tolerance_deg);
    c.n_textures = kv.get("n_textures", c.n_textures);
    c.textures = kv.get_list("textures", c.textures);
    const double inset = kv.get("zone_inset", 16.0);
    c.zone = {inset, inset, c.scene_size - inset, c.scene_size - inset};
    c.seed = static_cast<std::uint64_t>(kv.get("seed", static_cast<int>(c.seed)));
    c.validate();
    return c;
  }

  void validate() const {
    if (scene_size <= 0 || n_robots <= 0) throw InvalidInput("world config: sizes must be positive");
    if (min_objects < 0 || max_objects < min_objects)
      throw InvalidInput("world config: bad object count range");
    if (half_minor_min > half_major_min || half_minor_max > half_major_max)
      throw InvalidInput("world config: minor extents must not exceed major extents");
    if (textures.empty()) throw InvalidInput("world config: empty texture subset");
    for (int t : textures)
      if (t < 0 || t >= n_textures) throw InvalidInput("world config: texture id out of range");
    if (!Rect{0, 0, double(scene_size), double(scene_size)}.contains(zone))
      throw InvalidInput("world config: zone must lie inside the scene");
  }
};

struct WorldState {
  int scene_size = 256;
  std::vector<SimObject> objects;
  int background_texture = 0;
  std::map<int, NoiseTransform> noise;
  Rect zone;
  std::uint64_t rng_seed = 0;
  double margin = 4.0;
  double angle_tolerance = 15.0 * kPi / 180.0;

  bool in_scene(double x, double y) const {
    return x >= 0 && y >= 0 && x <= scene_size - 1 && y <= scene_size - 1;
  }
};

// ---------------------------------------------------------------------------
// Textures

namespace texture {

struct Params {
  int kind = 0;  // 0 stripes, 1 checker, 2 value noise, 3 dots
  std::array<double, 3> color_a{}, color_b{};
  double period = 8;
  double angle = 0;
};

inline Params params(int texture_id) {
  Rng rng(derive_seed(0x7e87u, static_cast<std::uint64_t>(texture_id)));
  Params p;
  p.kind = texture_id % 4;
  for (int c = 0; c < 3; ++c) {
    p.color_a[c] = rng.uniform(30, 225);
    p.color_b[c] = rng.uniform(30, 225);
  }
  // keep the two tones visibly different
  const double diff = std::abs(p.color_a[0] - p.color_b[0]) + std::abs(p.color_a[1] - p.color_b[1]) +
                      std::abs(p.color_a[2] - p.color_b[2]);
  if (diff < 120)
    for (int c = 0; c < 3; ++c) p.color_b[c] = 255 - p.color_a[c];
  p.period = rng.uniform(4, 12);
  p.angle = rng.uniform(0, kPi);
  return p;
}

inline double lattice(int texture_id, int ix, int iy) {
  const auto h = derive_seed(static_cast<std::uint64_t>(texture_id) * 0x100000001b3ULL,
                             (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
                                 static_cast<std::uint32_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Blend weight in [0, 1] between color_a and color_b at texture coords (u, v).
inline double weight(int texture_id, const Params& p, double u, double v) {
  const double c = std::cos(p.angle), s = std::sin(p.angle);
  const double ru = c * u + s * v, rv = -s * u + c * v;
  switch (p.kind) {
    case 0:
      return std::fmod(std::floor(ru / p.period), 2.0) == 0.0 ? 0.0 : 1.0;
    case 1: {
      const long k = static_cast<long>(std::floor(ru / p.period) + std::floor(rv / p.period));
      return (k % 2 == 0) ? 0.0 : 1.0;
    }
    case 2: {
      const double gx = u / p.period, gy = v / p.period;
      const int ix = static_cast<int>(std::floor(gx)), iy = static_cast<int>(std::floor(gy));
      const double fx = gx - ix, fy = gy - iy;
      const double a = lattice(texture_id, ix, iy), b = lattice(texture_id, ix + 1, iy);
      const double cc = lattice(texture_id, ix, iy + 1), d = lattice(texture_id, ix + 1, iy + 1);
      return (a * (1 - fx) + b * fx) * (1 - fy) + (cc * (1 - fx) + d * fx) * fy;
    }
    default: {
      const double cu = ru / p.period - std::floor(ru / p.period) - 0.5;
      const double cv = rv / p.period - std::floor(rv / p.period) - 0.5;
      return (cu * cu + cv * cv) < 0.09 ? 1.0 : 0.0;
    }
  }
}

}  // namespace texture

// ---------------------------------------------------------------------------
// Operations

// Background at reduced contrast; objects painted in order with their own
// (object-frame) texture and a dark rim.
inline Raster render_scene(const WorldState& world) {
  const int n = world.scene_size;
  Raster img(n, n, 3);
  const auto bg = texture::params(world.background_texture);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double w = texture::weight(world.background_texture, bg, x, y);
      for (int c = 0; c < 3; ++c) {
        const double mean = 0.5 * (bg.color_a[c] + bg.color_b[c]);
        const double full = bg.color_a[c] * (1 - w) + bg.color_b[c] * w;
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(0.5 * full + 0.5 * mean));
      }
    }
  constexpr double kRim = 1.5;
  for (const auto& obj : world.objects) {
    const auto tp = texture::params(obj.texture_id);
    const Rect bb = obj.bounding_box();
    const int xa = std::max(0, static_cast<int>(std::floor(bb.x0)));
    const int xb = std::min(n - 1, static_cast<int>(std::ceil(bb.x1)));
    const int ya = std::max(0, static_cast<int>(std::floor(bb.y0)));
    const int yb = std::min(n - 1, static_cast<int>(std::ceil(bb.y1)));
    for (int y = ya; y <= yb; ++y)
      for (int x = xa; x <= xb; ++x) {
        auto [u, v] = obj.to_local(x, y);
        if (std::abs(u) > obj.half_major || std::abs(v) > obj.half_minor) continue;
        const bool rim = std::abs(u) > obj.half_major - kRim || std::abs(v) > obj.half_minor - kRim;
        const double w = texture::weight(obj.texture_id, tp, u, v);
        for (int c = 0; c < 3; ++c) {
          const double val = rim ? 20.0 : tp.color_a[c] * (1 - w) + tp.color_b[c] * w;
          img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(val));
        }
      }
  }
  return img;
}

// Grasp succeeds iff the executed point lies in some object's footprint shrunk
// by the margin and the jaw is within the tolerance of perpendicular to that
// object's major axis.
inline bool oracle_grasp_success(const WorldState& world, const GraspConfig& executed) {
  for (const auto& obj : world.objects) {
    if (!obj.inside(executed.x, executed.y, world.margin)) continue;
    if (half_turn_distance(executed.theta, obj.perpendicular_angle()) <= world.angle_tolerance)
      return true;
  }
  return false;
}

inline GraspConfig execute_with_noise(const GraspConfig& commanded, const NoiseTransform& noise) {
  const auto [dx, dy] = noise.displacement(commanded.x, commanded.y);
  const double hi = noise.scene_size - 1;
  return {std::clamp(commanded.x + dx, 0.0, hi), std::clamp(commanded.y + dy, 0.0, hi),
          commanded.theta};
}

// Scales the non-identity parts so the displacement bound respects max_noise.
inline void limit_noise(NoiseTransform& t, double max_noise) {
  const double bound = t.displacement_bound();
  if (bound <= max_noise || bound == 0.0) return;
  const double k = max_noise / bound * (1.0 - 1e-12);
  t.affine = {1 + (t.affine[0] - 1) * k, t.affine[1] * k, t.affine[2] * k, 1 + (t.affine[3] - 1) * k};
  for (auto& v : t.offset) v *= k;
  for (auto& v : t.field_x) v *= k;
  for (auto& v : t.field_y) v *= k;
}

// Robot r's constant offset points at angle 2*pi*r/R (plus jitter), so with
// an even fleet robots r and r + R/2 are pushed in opposite directions.
inline std::map<int, NoiseTransform> make_fleet(const WorldConfig& cfg) {
  std::map<int, NoiseTransform> fleet;
  Rng rng(derive_seed(cfg.seed, 0xf1ee7ULL));
  for (int r = 0; r < cfg.n_robots; ++r) {
    NoiseTransform t = NoiseTransform::identity(r, cfg.scene_size);
    const double jitter = rng.uniform(-1, 1) * cfg.direction_jitter_deg * kPi / 180.0;
    const double dir = 2 * kPi * r / cfg.n_robots + jitter;
    const double mag = cfg.max_noise * rng.uniform(cfg.offset_min_frac, cfg.offset_max_frac);
    t.offset = {mag * std::cos(dir), mag * std::sin(dir)};
    t.affine = {1 + rng.uniform(-1, 1) * cfg.affine_scale, rng.uniform(-1, 1) * cfg.affine_scale,
                rng.uniform(-1, 1) * cfg.affine_scale, 1 + rng.uniform(-1, 1) * cfg.affine_scale};
    for (int i = 0; i < 3; ++i) {
      t.field_x[i] = rng.uniform(-1, 1) * cfg.field_scale;
      t.field_y[i] = rng.uniform(-1, 1) * cfg.field_scale;
    }
    limit_noise(t, cfg.max_noise);
    fleet.emplace(r, t);
  }
  return fleet;
}

// Scene `scene_index` of a config; objects are placed without overlap and
// fully inside the scene.
inline WorldState make_world(const WorldConfig& cfg, std::uint64_t scene_seed,
                             const std::map<int, NoiseTransform>& fleet) {
  WorldState w;
  w.scene_size = cfg.scene_size;
  w.noise = fleet;
  w.zone = cfg.zone;
  w.rng_seed = scene_seed;
  w.margin = cfg.margin;
  w.angle_tolerance = cfg.angle_tolerance_deg * kPi / 180.0;
  Rng rng(scene_seed);
  w.background_texture = cfg.textures[static_cast<std::size_t>(rng.index(static_cast<int>(cfg.textures.size())))];
  const int count = rng.integer(cfg.min_objects, cfg.max_objects);
  const Rect scene{1, 1, cfg.scene_size - 2.0, cfg.scene_size - 2.0};
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      SimObject o;
      o.half_major = rng.uniform(cfg.half_major_min, cfg.half_major_max);
      o.half_minor = std::min(o.half_major, rng.uniform(cfg.half_minor_min, cfg.half_minor_max));
      o.major_axis_angle = rng.uniform(0, kPi);
      o.cx = rng.uniform(0, cfg.scene_size);
      o.cy = rng.uniform(0, cfg.scene_size);
      int tex = cfg.textures[static_cast<std::size_t>(rng.index(static_cast<int>(cfg.textures.size())))];
      if (tex == w.background_texture && cfg.textures.size() > 1)
        tex = cfg.textures[(static_cast<std::size_t>(std::find(cfg.textures.begin(), cfg.textures.end(), tex) -
                                                     cfg.textures.begin()) + 1) % cfg.textures.size()];
      o.texture_id = tex;
      if (!scene.contains(o.bounding_box())) continue;
      const double r = std::hypot(o.half_major, o.half_minor);
      bool clear = true;
      for (const auto& other : w.objects) {
        const double ro = std::hypot(other.half_major, other.half_minor);
        if (std::hypot(other.cx - o.cx, other.cy - o.cy) < r + ro + 4) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      w.objects.push_back(o);
      break;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Records and datasets

// Compact record: the raster patch is re-derived from the scene on demand.
struct RecordEntry {
  int scene_id = 0;
  GraspConfig grasp;     // commanded
  GraspConfig executed;  // simulator ground truth, diagnostics only
  bool success = false;
  int robot_id = 0;

  friend bool operator==(const RecordEntry&, const RecordEntry&) = default;
};

struct Dataset {
  std::string split = "train";
  int patch_size = 32;
  std::vector<Raster> scenes;
  std::vector<std::uint64_t> scene_seeds;
  std::vector<RecordEntry> records;
  std::map<int, NoiseTransform> noise;

  std::size_t size() const { return records.size(); }

  GraspRecord materialize(std::size_t i) const {
    const auto& e = records.at(i);
    const Raster& scene = scenes.at(static_cast<std::size_t>(e.scene_id));
    GraspRecord r;
    r.scene_image = scene;
    r.patch = extract_patch(scene, to_pixel(e.grasp), patch_size);
    r.grasp = e.grasp;
    r.success = e.success;
    r.context = {e.robot_id, to_pixel(e.grasp), e.scene_id};
    return r;
  }

  std::vector<int> robot_ids() const {
    std::vector<int> ids;
    for (const auto& r : records)
      if (std::find(ids.begin(), ids.end(), r.robot_id) == ids.end()) ids.push_back(r.robot_id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

// Stores the commanded pose, labels it with the outcome at the executed pose.
inline RecordEntry label_entry(const WorldState& world, const GraspConfig& commanded, int robot_id,
                               int scene_id) {
  auto it = world.noise.find(robot_id);
  if (it == world.noise.end())
    throw InvalidInput("label_grasp: unknown robot id " + std::to_string(robot_id));
  if (!world.in_scene(commanded.x, commanded.y)) throw InvalidInput("label_grasp: commanded grasp outside scene");
  RecordEntry e;
  e.scene_id = scene_id;
  e.grasp = commanded;
  e.executed = execute_with_noise(commanded, it->second);
  e.success = oracle_grasp_success(world, e.executed);
  e.robot_id = robot_id;
  return e;
}

inline GraspRecord label_grasp(const WorldState& world, const Raster& scene, const GraspConfig& commanded,
                               int robot_id, int patch_size = 32) {
  const auto e = label_entry(world, commanded, robot_id, 0);
  GraspRecord r;
  r.scene_image = scene;
  r.patch = extract_patch(scene, to_pixel(commanded), patch_size);
  r.grasp = commanded;
  r.success = e.success;
  r.context = {robot_id, to_pixel(commanded), 0};
  return r;
}

inline GraspRecord label_grasp(const WorldState& world, const GraspConfig& commanded, int robot_id,
                               int patch_size = 32) {
  return label_grasp(world, render_scene(world), commanded, robot_id, patch_size);
}

struct GenerateConfig {
  WorldConfig world;
  int n_scenes = 400;
  int grasps_per_scene = 50;
  int patch_size = 32;
  double background_fraction = 0.1;
  double perpendicular_fraction = 0.85;  // grasp angles from a bootstrap sampler
  double angle_jitter_deg = 6.0;
  double minor_spread = 0.0;             // v sampled in +-(b + minor_spread)
  std::uint64_t scene_seed_base = 0;     // scene i uses derive_seed(seed, base + i)
  std::string split = "train";

  static GenerateConfig from(const KeyValueConfig& kv) {
    GenerateConfig g;
    g.world = WorldConfig::from(kv);
    g.n_scenes = kv.get("n_scenes", g.n_scenes);
    g.grasps_per_scene = kv.get("grasps_per_scene", g.grasps_per_scene);
    g.patch_size = kv.get("patch_size", g.patch_size);
    g.background_fraction = kv.get("background_fraction", g.background_fraction);
    g.perpendicular_fraction = kv.get("perpendicular_fraction", g.perpendicular_fraction);
    g.angle_jitter_deg = kv.get("angle_jitter_deg", g.angle_jitter_deg);
    g.minor_spread = kv.get("minor_spread", g.minor_spread);
    g.scene_seed_base = static_cast<std::uint64_t>(kv.get("scene_seed_base", 0));
    g.split = kv.get("split", g.split);
    return g;
  }
};

// Grasp proposals around an object (a detector neighbourhood) or, with
// probability background_fraction, anywhere in the scene.
inline GraspConfig sample_grasp(const WorldState& world, const GenerateConfig& g, Rng& rng) {
  const double hi = world.scene_size - 1;
  if (world.objects.empty() || rng.bernoulli(g.background_fraction))
    return {rng.uniform(0, hi), rng.uniform(0, hi), rng.uniform(0, kPi)};
  const auto& o = world.objects[static_cast<std::size_t>(rng.index(static_cast<int>(world.objects.size())))];
  const double u = rng.uniform(-o.half_major, o.half_major);
  const double v = rng.uniform(-(o.half_minor + g.minor_spread), o.half_minor + g.minor_spread);
  const double c = std::cos(o.major_axis_angle), s = std::sin(o.major_axis_angle);
  GraspConfig gc;
  gc.x = std::clamp(o.cx + c * u - s * v, 0.0, hi);
  gc.y = std::clamp(o.cy + s * u + c * v, 0.0, hi);
  gc.theta = rng.bernoulli(g.perpendicular_fraction)
                 ? wrap_half_turn(o.perpendicular_angle() + rng.normal(0, g.angle_jitter_deg * kPi / 180.0))
                 : rng.uniform(0, kPi);
  return gc;
}

inline Dataset generate_dataset(const GenerateConfig& g) {
  g.world.validate();
  if (g.n_scenes < 0 || g.grasps_per_scene < 0) throw InvalidInput("generate: negative counts");
  Dataset ds;
  ds.split = g.split;
  ds.patch_size = g.patch_size;
  ds.noise = make_fleet(g.world);
  ds.scenes.reserve(static_cast<std::size_t>(g.n_scenes));
  ds.records.reserve(static_cast<std::size_t>(g.n_scenes) * g.grasps_per_scene);
  for (int s = 0; s < g.n_scenes; ++s) {
    const auto seed = derive_seed(g.world.seed, g.scene_seed_base + static_cast<std::uint64_t>(s));
    const WorldState world = make_world(g.world, seed, ds.noise);
    ds.scenes.push_back(render_scene(world));
    ds.scene_seeds.push_back(seed);
    Rng rng(derive_seed(seed, 0x9a5bULL));
    for (int k = 0; k < g.grasps_per_scene; ++k) {
      const int robot = static_cast<int>(ds.records.size() % static_cast<std::size_t>(g.world.n_robots));
      ds.records.push_back(label_entry(world, sample_grasp(world, g, rng), robot, s));
    }
  }
  return ds;
}

// Fraction of records whose stored label disagrees with the outcome at the
// commanded pose (requires the generating worlds).
inline double flipped_label_fraction(const Dataset& ds, const GenerateConfig& g) {
  if (ds.records.empty()) return 0.0;
  std::size_t flipped = 0;
  std::vector<WorldState> worlds;
  for (std::size_t s = 0; s < ds.scenes.size(); ++s) worlds.push_back(make_world(g.world, ds.scene_seeds[s], ds.noise));
  for (const auto& r : ds.records)
    if (oracle_grasp_success(worlds[static_cast<std::size_t>(r.scene_id)], r.grasp) != r.success) ++flipped;
  return static_cast<double>(flipped) / static_cast<double>(ds.records.size());
}

}  // namespace robust_grasp
