#pragma once

// Two-stage optimization (GPN alone on the recorded patch, then GPN and NMN
// jointly through the marginalization) and the evaluation protocols.

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkpoint.hpp"
#include "hash.hpp"
#include "model.hpp"
#include "optim.hpp"
#include "simworld.hpp"

namespace robust_grasp {

struct LeakError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int stage1_epochs = 5;
  int stage2_epochs = 25;
  int batch_size = 32;
  AdamOptions adam{};
  std::uint64_t seed = 1;
  bool deterministic = true;
  NoiseMode stage2_mode = NoiseMode::learned;
  bool cold_start = false;  // skip stage 1 (ablation)
  int probe_size = 512;
  ModelConfig model;

  void validate() const {
    if (stage1_epochs < 0) throw InvalidInput("train config: stage1_epochs must be >= 0");
    if (stage2_epochs < 1) throw InvalidInput("train config: stage2_epochs must be >= 1");
    if (batch_size < 1) throw InvalidInput("train config: batch_size must be >= 1");
    if (!(adam.learning_rate > 0)) throw InvalidInput("train config: learning_rate must be positive");
    model.validate();
  }

  static TrainConfig from(const KeyValueConfig& kv) {
    TrainConfig c;
    c.stage1_epochs = kv.get("stage1_epochs", c.stage1_epochs);
    c.stage2_epochs = kv.get("stage2_epochs", c.stage2_epochs);
    c.batch_size = kv.get("batch_size", c.batch_size);
    c.adam.learning_rate = kv.get("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = kv.get("beta1", c.adam.beta1);
    c.adam.beta2 = kv.get("beta2", c.adam.beta2);
    c.seed = static_cast<std::uint64_t>(kv.get("seed", static_cast<int>(c.seed)));
    c.deterministic = kv.get("deterministic", c.deterministic);
    c.stage2_mode = noise_mode_from(kv.get("stage2_mode", std::string("learned")));
    c.cold_start = kv.get("cold_start", c.cold_start);
    c.probe_size = kv.get("probe_size", c.probe_size);
    c.model = ModelConfig::from(kv);
    c.validate();
    return c;
  }
};

struct EpochMetrics {
  int stage = 1;
  int epoch = 0;
  std::string split;
  double loss = 0;
  double accuracy = 0;
  double nmn_entropy = 0;

  nlohmann::json to_json() const {
    return {{"stage", stage}, {"epoch", epoch}, {"split", split}, {"loss", loss}, {"accuracy", accuracy},
            {"nmn_entropy", nmn_entropy}};
  }
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

// Samples over a dataset with the scene encodings the NMN consumes.
template <class S>
class PreparedDataset {
 public:
  PreparedDataset(const Dataset& ds, const ModelConfig& cfg) : ds_(&ds) {
    if (ds.patch_size != cfg.patch_size) throw InvalidInput("dataset patch size does not match model");
    codes_.reserve(ds.scenes.size());
    for (const auto& s : ds.scenes) codes_.push_back(encode_scene<S>(s, cfg));
    const AngleBinning binning(cfg.n_bins);
    samples_.reserve(ds.records.size());
    for (const auto& r : ds.records) {
      const auto sid = static_cast<std::size_t>(r.scene_id);
      if (sid >= ds.scenes.size()) throw CorruptDataset("record references missing scene " + std::to_string(sid));
      samples_.push_back({&ds.scenes[sid], codes_[sid].data(), to_pixel(r.grasp), r.robot_id,
                          discretize_angle(r.grasp.theta, binning), r.success});
    }
  }
  PreparedDataset(const PreparedDataset&) = delete;
  PreparedDataset& operator=(const PreparedDataset&) = delete;

  std::span<const Sample<S>> samples() const { return samples_; }
  const Dataset& dataset() const { return *ds_; }
  std::size_t size() const { return samples_.size(); }

 private:
  const Dataset* ds_;
  std::vector<std::vector<S>> codes_;
  std::vector<Sample<S>> samples_;
};

inline std::uint64_t scene_fingerprint(const Raster& r) {
  Fnv1a h;
  h.update(r.data.data(), r.data.size());
  return h.digest();
}

// Training and evaluation sets must not share scenes.
inline void check_disjoint(const Dataset& train, const Dataset& heldout) {
  if (train.split != "train") throw LeakError("training dataset is tagged '" + train.split + "'");
  std::set<std::uint64_t> seen;
  for (const auto& s : train.scenes) seen.insert(scene_fingerprint(s));
  for (std::size_t i = 0; i < heldout.scenes.size(); ++i)
    if (seen.count(scene_fingerprint(heldout.scenes[i])))
      throw LeakError("held-out scene " + std::to_string(i) + " also appears in the training set");
}

// ---------------------------------------------------------------------------
// Evaluation

struct BinaryMetrics {
  double accuracy = 0;
  double loss = 0;
  std::size_t count = 0;
  std::map<int, std::pair<std::size_t, std::size_t>> per_robot;  // robot -> (correct, total)

  double robot_accuracy(int robot) const {
    auto it = per_robot.find(robot);
    if (it == per_robot.end() || it->second.second == 0) return 0;
    return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
  }
};

// Marginal probability at the recorded bin thresholded at 0.5.
template <class S>
BinaryMetrics evaluate_binary(const RobustGraspModel<S>& model, const PreparedDataset<S>& data,
                              double threshold = 0.5) {
  BinaryMetrics m;
  const auto samples = data.samples();
  constexpr std::size_t kChunk = 128;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < samples.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, samples.size() - start);
    const auto batch = samples.subspan(start, len);
    const auto probs = model.marginal(batch);
    for (std::size_t i = 0; i < len; ++i) {
      const auto& s = batch[i];
      const double p = static_cast<double>(probs(s.bin, static_cast<Eigen::Index>(i)));
      const bool ok = (p >= threshold) == s.label;
      correct += ok;
      auto& pr = m.per_robot[s.robot_id];
      pr.first += ok;
      ++pr.second;
      const double pc = std::clamp(p, kProbabilityClamp, 1 - kProbabilityClamp);
      m.loss += s.label ? -std::log(pc) : -std::log(1 - pc);
    }
  }
  m.count = samples.size();
  if (m.count) {
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.count);
    m.loss /= static_cast<double>(m.count);
  }
  return m;
}

// Mean entropy of the model's patch distribution over up to `limit` samples.
template <class S>
double mean_nmn_entropy(const RobustGraspModel<S>& model, std::span<const Sample<S>> probe) {
  if (probe.empty()) return 0;
  double h = 0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < probe.size(); start += kChunk) {
    const auto w = model.noise_distribution(probe.subspan(start, std::min(kChunk, probe.size() - start)));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index j = 0; j < w.rows(); ++j)
        if (w(j, c) > 0) h -= static_cast<double>(w(j, c) * std::log(w(j, c)));
  }
  return h / static_cast<double>(probe.size());
}

// ---------------------------------------------------------------------------
// Training

template <class S>
class Trainer {
 public:
  Trainer(RobustGraspModel<S>& model, TrainConfig cfg) : model_(model), cfg_(std::move(cfg)) { cfg_.validate(); }

  void set_sink(MetricsSink sink) { sink_ = std::move(sink); }
  // Writes <dir>/stage<k>_epoch<e>.ckpt after every epoch.
  void set_checkpoint_dir(std::string dir) { ckpt_dir_ = std::move(dir); }

  // GPN alone on the recorded (noisy) patch; NMN untouched.
  std::vector<EpochMetrics> train_stage1(const PreparedDataset<S>& train, const PreparedDataset<S>* heldout = nullptr) {
    model_.set_noise_mode(NoiseMode::center_only);
    return run(1, cfg_.stage1_epochs, model_.gpn_params(), train, heldout);
  }

  // Joint GPN + NMN through the marginalization (or a frozen NMN for baselines).
  std::vector<EpochMetrics> train_stage2(const PreparedDataset<S>& train, const PreparedDataset<S>* heldout = nullptr) {
    model_.set_noise_mode(cfg_.stage2_mode);
    auto params = model_.gpn_params();
    if (cfg_.stage2_mode == NoiseMode::learned)
      for (auto& p : model_.nmn_params()) params.push_back(p);
    return run(2, cfg_.stage2_epochs, params, train, heldout);
  }

  std::vector<EpochMetrics> train_both(const PreparedDataset<S>& train, const PreparedDataset<S>* heldout = nullptr) {
    std::vector<EpochMetrics> all;
    if (!cfg_.cold_start) all = train_stage1(train, heldout);
    auto s2 = train_stage2(train, heldout);
    all.insert(all.end(), s2.begin(), s2.end());
    return all;
  }

 private:
  std::vector<EpochMetrics> run(int stage, int epochs, std::vector<nn::ParamBlock<S>> params,
                                const PreparedDataset<S>& train, const PreparedDataset<S>* heldout) {
    if (train.size() == 0) throw InvalidInput("training set is empty");
    if (heldout) check_disjoint(train.dataset(), heldout->dataset());
    Adam<S> opt(std::move(params), cfg_.adam);
    const auto samples = train.samples();
    const auto probe = heldout ? heldout->samples().first(std::min<std::size_t>(heldout->size(), cfg_.probe_size))
                               : samples.first(std::min<std::size_t>(samples.size(), cfg_.probe_size));
    std::vector<std::size_t> order(samples.size());
    std::vector<Sample<S>> batch;
    std::vector<EpochMetrics> log;
    for (int epoch = 1; epoch <= epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(stage * 100000 + epoch)));
      rng.shuffle(order);
      double loss_sum = 0;
      std::size_t n_batches = 0;
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg_.batch_size)) {
        batch.clear();
        for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg_.batch_size)); ++i)
          batch.push_back(samples[order[i]]);
        opt.zero_grad();
        const auto r = model_.loss_and_grad(batch);
        opt.step();
        loss_sum += static_cast<double>(r.loss);
        ++n_batches;
      }
      EpochMetrics tm{stage, epoch, "train", loss_sum / static_cast<double>(n_batches), 0, 0};
      tm.nmn_entropy = mean_nmn_entropy(model_, probe);
      emit(tm, log);
      if (heldout) {
        const auto ev = evaluate_binary(model_, *heldout);
        emit({stage, epoch, "heldout", ev.loss, ev.accuracy, tm.nmn_entropy}, log);
      }
      if (!ckpt_dir_.empty()) {
        std::filesystem::create_directories(ckpt_dir_);
        save_checkpoint(model_, ckpt_dir_ + "/stage" + std::to_string(stage) + "_epoch" + std::to_string(epoch) + ".ckpt");
      }
    }
    return log;
  }

  void emit(const EpochMetrics& m, std::vector<EpochMetrics>& log) {
    log.push_back(m);
    if (sink_) sink_(m);
  }

  RobustGraspModel<S>& model_;
  TrainConfig cfg_;
  MetricsSink sink_;
  std::string ckpt_dir_;
};

// ---------------------------------------------------------------------------
// Simulated grasp execution

struct SimEvalConfig {
  std::vector<int> robots;     // executing robots; each world is tried with each
  int candidate_stride = 4;    // pixels between candidate centers
  double candidate_expand = 10;  // candidate box = object bbox grown by this
  bool zero_noise = false;     // execute exactly at the commanded pose
};

struct SimEvalResult {
  double success_rate = 0;
  double random_floor = 0;  // expected success of a uniformly random candidate and bin
  int trials = 0;
  std::vector<bool> outcomes;
};

// Candidate grasp centers on a grid over every object's grown bounding box
// (an exact object detector), de-duplicated, in scan order.
inline std::vector<Pixel> object_candidates(const WorldState& world, int stride, double expand) {
  std::set<std::pair<int, int>> seen;
  std::vector<Pixel> out;
  for (const auto& o : world.objects) {
    const Rect bb = o.bounding_box();
    const int x0 = std::max(0, static_cast<int>(std::floor(bb.x0 - expand)));
    const int y0 = std::max(0, static_cast<int>(std::floor(bb.y0 - expand)));
    const int x1 = std::min(world.scene_size - 1, static_cast<int>(std::ceil(bb.x1 + expand)));
    const int y1 = std::min(world.scene_size - 1, static_cast<int>(std::ceil(bb.y1 + expand)));
    for (int y = y0 - y0 % stride; y <= y1; y += stride)
      for (int x = x0 - x0 % stride; x <= x1; x += stride)
        if (x >= 0 && y >= 0 && seen.insert({y, x}).second) out.push_back({x, y});
  }
  std::sort(out.begin(), out.end(), [](Pixel a, Pixel b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
  return out;
}

template <class S>
SimEvalResult evaluate_sim_grasping(const RobustGraspModel<S>& model, std::span<const WorldState> worlds,
                                    const SimEvalConfig& cfg) {
  if (worlds.empty()) throw InvalidInput("evaluate_sim_grasping: no worlds");
  if (cfg.robots.empty()) throw InvalidInput("evaluate_sim_grasping: no executing robots");
  SimEvalResult res;
  double floor_sum = 0;
  const AngleBinning binning = model.binning();
  for (const auto& world : worlds) {
    const Raster scene = render_scene(world);
    const auto candidates = object_candidates(world, cfg.candidate_stride, cfg.candidate_expand);
    if (candidates.empty()) throw InvalidInput("evaluate_sim_grasping: world without objects");
    for (int robot : cfg.robots) {
      auto it = world.noise.find(robot);
      if (it == world.noise.end()) throw InvalidInput("evaluate_sim_grasping: unknown robot");
      const auto& noise = it->second;
      auto execute = [&](const GraspConfig& g) { return cfg.zero_noise ? g : execute_with_noise(g, noise); };
      const auto best = predict_best_grasp(model, scene, std::span<const Pixel>(candidates), robot);
      const bool ok = oracle_grasp_success(world, execute(best.grasp));
      res.outcomes.push_back(ok);
      std::size_t hits = 0;
      for (const auto& c : candidates)
        for (int k = 0; k < binning.n_bins(); ++k)
          hits += oracle_grasp_success(world, execute({double(c.x), double(c.y), binning.bin_center(k)}));
      floor_sum += static_cast<double>(hits) / static_cast<double>(candidates.size() * binning.n_bins());
    }
  }
  res.trials = static_cast<int>(res.outcomes.size());
  res.success_rate = static_cast<double>(std::count(res.outcomes.begin(), res.outcomes.end(), true)) / res.trials;
  res.random_floor = floor_sum / res.trials;
  return res;
}

}  // namespace robust_grasp
