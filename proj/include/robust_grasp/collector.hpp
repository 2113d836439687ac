#pragma once

// Simulated home data collection: an epsilon-greedy loop that either grasps
// nearby detected objects or drives the base toward a far detection, with
// the base confined to an operating zone.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "model.hpp"
#include "simworld.hpp"
#include "training.hpp"

namespace robust_grasp {

struct DetectorNoise {
  double false_positive_rate = 0;  // chance of one spurious box per view
  double position_jitter = 0;      // pixels, std-dev of center jitter
};

struct Detection {
  Rect bbox;
  double cx = 0, cy = 0;
};

struct CollectionConfig {
  double epsilon_near = 0.8;
  Rect zone{16, 16, 240, 240};
  int max_steps = 40;
  double reach_radius = 64;
  DetectorNoise detector;
  bool remove_on_success = true;
  int patch_size = 32;

  void validate(int scene_size) const {
    if (!(epsilon_near >= 0 && epsilon_near <= 1)) throw InvalidInput("collection: epsilon_near must be in [0, 1]");
    if (!Rect{0, 0, double(scene_size), double(scene_size)}.contains(zone))
      throw InvalidInput("collection: zone must lie inside the scene");
    if (max_steps < 0) throw InvalidInput("collection: max_steps must be >= 0");
  }

  static CollectionConfig from(const KeyValueConfig& kv, const WorldConfig& world) {
    CollectionConfig c;
    c.epsilon_near = kv.get("epsilon_near", c.epsilon_near);
    c.zone = world.zone;
    c.max_steps = kv.get("max_steps", c.max_steps);
    c.reach_radius = kv.get("reach_radius", c.reach_radius);
    c.detector.false_positive_rate = kv.get("detector_fp_rate", c.detector.false_positive_rate);
    c.detector.position_jitter = kv.get("detector_jitter", c.detector.position_jitter);
    c.remove_on_success = kv.get("remove_on_success", c.remove_on_success);
    c.patch_size = kv.get("patch_size", c.patch_size);
    c.validate(world.scene_size);
    return c;
  }
};

// True boxes of objects centered inside `view` (jittered), plus with
// probability false_positive_rate one spurious box. No class labels.
inline std::vector<Detection> oracle_detector(const WorldState& world, const Rect& view, const DetectorNoise& noise,
                                              Rng& rng) {
  std::vector<Detection> out;
  const double hi = world.scene_size - 1;
  for (const auto& o : world.objects) {
    if (!view.contains(o.cx, o.cy)) continue;
    Detection d;
    d.bbox = o.bounding_box();
    d.cx = o.cx;
    d.cy = o.cy;
    if (noise.position_jitter > 0) {
      const double jx = rng.normal(0, noise.position_jitter), jy = rng.normal(0, noise.position_jitter);
      d.cx = std::clamp(d.cx + jx, 0.0, hi);
      d.cy = std::clamp(d.cy + jy, 0.0, hi);
      d.bbox = {d.bbox.x0 + jx, d.bbox.y0 + jy, d.bbox.x1 + jx, d.bbox.y1 + jy};
    }
    out.push_back(d);
  }
  if (noise.false_positive_rate > 0 && rng.bernoulli(noise.false_positive_rate)) {
    Detection d;
    d.cx = std::clamp(rng.uniform(view.x0, view.x1), 0.0, hi);
    d.cy = std::clamp(rng.uniform(view.y0, view.y1), 0.0, hi);
    const double half = rng.uniform(5, 15);
    d.bbox = {d.cx - half, d.cy - half, d.cx + half, d.cy + half};
    out.push_back(d);
  }
  return out;
}

// Planner stand-in: the target must be in the zone and within reach of the base.
inline bool feasible(double px, double py, double base_x, double base_y, const Rect& zone, double reach) {
  return zone.contains(px, py) && std::hypot(px - base_x, py - base_y) <= reach;
}

// Grasp sampler G(I_o).
class GraspPolicy {
 public:
  virtual ~GraspPolicy() = default;
  virtual GraspConfig sample(const WorldState& world, const Raster& scene, const Detection& target, int robot_id,
                             Rng& rng) = 0;
};

// Detection center with a uniformly random angle.
class RandomPolicy final : public GraspPolicy {
 public:
  GraspConfig sample(const WorldState&, const Raster&, const Detection& d, int, Rng& rng) override {
    return {d.cx, d.cy, rng.uniform(0, kPi)};
  }
};

// Uses simulator ground truth: center of the nearest object, perpendicular jaw.
class PerpendicularPolicy final : public GraspPolicy {
 public:
  GraspConfig sample(const WorldState& world, const Raster&, const Detection& d, int, Rng&) override {
    const SimObject* best = nullptr;
    double best_d = 1e300;
    for (const auto& o : world.objects) {
      const double dist = std::hypot(o.cx - d.cx, o.cy - d.cy);
      if (dist < best_d) {
        best_d = dist;
        best = &o;
      }
    }
    if (!best) return {d.cx, d.cy, 0};
    return {best->cx, best->cy, best->perpendicular_angle()};
  }
};

// Epsilon-greedy bootstrap: random with probability `explore`, otherwise the
// model's best grasp among candidates around the detection.
template <class S>
class ModelPolicy final : public GraspPolicy {
 public:
  ModelPolicy(const RobustGraspModel<S>& model, double explore) : model_(model), explore_(explore) {}

  GraspConfig sample(const WorldState& world, const Raster& scene, const Detection& d, int robot_id,
                     Rng& rng) override {
    if (rng.bernoulli(explore_)) return RandomPolicy{}.sample(world, scene, d, robot_id, rng);
    std::vector<Pixel> cands;
    const int hi = world.scene_size - 1;
    for (int y = static_cast<int>(d.bbox.y0); y <= static_cast<int>(d.bbox.y1); y += 4)
      for (int x = static_cast<int>(d.bbox.x0); x <= static_cast<int>(d.bbox.x1); x += 4)
        if (x >= 0 && y >= 0 && x <= hi && y <= hi) cands.push_back({x, y});
    if (cands.empty()) cands.push_back({static_cast<int>(std::lround(d.cx)), static_cast<int>(std::lround(d.cy))});
    return predict_best_grasp(model_, scene, std::span<const Pixel>(cands), robot_id).grasp;
  }

 private:
  const RobustGraspModel<S>& model_;
  double explore_;
};

enum class ExitReason { no_objects, max_steps };

inline std::string to_string(ExitReason r) { return r == ExitReason::no_objects ? "no_objects" : "max_steps"; }

struct TraceStep {
  int step = 0;
  bool grasp_near = false;
  bool random_decision = false;  // false when forced after a base move
  double base_x = 0, base_y = 0;
  int grasps = 0;
  int infeasible_skipped = 0;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  ExitReason exit = ExitReason::max_steps;
  int random_decisions = 0;
  int random_grasp_decisions = 0;
  int base_moves = 0;
  int infeasible_skipped = 0;
  std::vector<std::pair<double, double>> record_base_positions;  // one per record
};

struct EpisodeResult {
  Dataset data;  // records in the shared dataset format
  EpisodeTrace trace;
};

inline EpisodeResult run_episode(WorldState world, GraspPolicy& policy, const CollectionConfig& cfg, int robot_id,
                                 std::uint64_t seed) {
  cfg.validate(world.scene_size);
  if (!world.noise.count(robot_id)) throw InvalidInput("run_episode: unknown robot id");
  Rng rng(seed);
  EpisodeResult res;
  res.data.patch_size = cfg.patch_size;
  res.data.noise = world.noise;
  auto& trace = res.trace;
  double bx = cfg.zone.center_x(), by = cfg.zone.center_y();
  bool forced_grasp = false;
  bool scene_dirty = true;
  int step = 0;
  const Rect whole{0, 0, double(world.scene_size - 1), double(world.scene_size - 1)};

  auto current_scene = [&]() -> int {
    if (scene_dirty) {
      res.data.scenes.push_back(render_scene(world));
      res.data.scene_seeds.push_back(world.rng_seed);
      scene_dirty = false;
    }
    return static_cast<int>(res.data.scenes.size()) - 1;
  };

  for (;;) {
    if (world.objects.empty()) {
      trace.exit = ExitReason::no_objects;
      break;
    }
    if (step >= cfg.max_steps) {
      trace.exit = ExitReason::max_steps;
      break;
    }
    ++step;
    TraceStep ts;
    ts.step = step;
    if (forced_grasp) {
      ts.grasp_near = true;
      forced_grasp = false;
    } else {
      ts.random_decision = true;
      ts.grasp_near = rng.bernoulli(cfg.epsilon_near);
      ++trace.random_decisions;
      trace.random_grasp_decisions += ts.grasp_near;
    }
    ts.base_x = bx;
    ts.base_y = by;

    if (ts.grasp_near) {
      const Rect view{bx - cfg.reach_radius, by - cfg.reach_radius, bx + cfg.reach_radius, by + cfg.reach_radius};
      const auto close = oracle_detector(world, view, cfg.detector, rng);
      for (const auto& d : close) {
        if (!feasible(d.cx, d.cy, bx, by, cfg.zone, cfg.reach_radius)) {
          ++ts.infeasible_skipped;
          continue;
        }
        const int sid = current_scene();
        GraspConfig g = policy.sample(world, res.data.scenes[static_cast<std::size_t>(sid)], d, robot_id, rng);
        g.x = std::clamp(g.x, 0.0, world.scene_size - 1.0);
        g.y = std::clamp(g.y, 0.0, world.scene_size - 1.0);
        g.theta = wrap_half_turn(g.theta);
        const auto entry = label_entry(world, g, robot_id, sid);
        res.data.records.push_back(entry);
        trace.record_base_positions.emplace_back(bx, by);
        ++ts.grasps;
        if (entry.success && cfg.remove_on_success) {
          auto it = std::find_if(world.objects.begin(), world.objects.end(), [&](const SimObject& o) {
            return o.inside(entry.executed.x, entry.executed.y, world.margin);
          });
          if (it != world.objects.end()) {
            world.objects.erase(it);
            scene_dirty = true;
          }
        }
      }
      trace.infeasible_skipped += ts.infeasible_skipped;
    } else {
      auto far = oracle_detector(world, whole, cfg.detector, rng);
      std::erase_if(far, [&](const Detection& d) { return std::hypot(d.cx - bx, d.cy - by) <= cfg.reach_radius; });
      if (far.empty()) {
        trace.steps.push_back(ts);
        trace.exit = ExitReason::no_objects;
        break;
      }
      const auto& target = far[static_cast<std::size_t>(rng.index(static_cast<int>(far.size())))];
      bx = std::clamp(target.cx, cfg.zone.x0, cfg.zone.x1);
      by = std::clamp(target.cy, cfg.zone.y0, cfg.zone.y1);
      ++trace.base_moves;
      forced_grasp = true;
    }
    trace.steps.push_back(ts);
  }
  return res;
}

// Appends `from` to `into`, re-basing scene indices.
inline void append_dataset(Dataset& into, const Dataset& from) {
  const int base = static_cast<int>(into.scenes.size());
  into.scenes.insert(into.scenes.end(), from.scenes.begin(), from.scenes.end());
  into.scene_seeds.insert(into.scene_seeds.end(), from.scene_seeds.begin(), from.scene_seeds.end());
  for (auto r : from.records) {
    r.scene_id += base;
    into.records.push_back(r);
  }
  if (into.noise.empty()) into.noise = from.noise;
}

}  // namespace robust_grasp
