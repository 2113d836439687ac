#pragma once

// Grasp Prediction Network (GPN), Noise Modelling Network (NMN), the
// marginalization over the nine latent execution patches, and the loss.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "config.hpp"
#include "core.hpp"
#include "nn.hpp"
#include "rng.hpp"

namespace robust_grasp {

inline constexpr double kProbabilityClamp = 1e-7;

// ---------------------------------------------------------------------------
// Plain-value operations on model outputs

struct GPNOutput {
  // probs[j][k]: success probability of hypothesis patch j at angle bin k
  std::vector<std::vector<double>> probs;

  int n_bins() const { return probs.empty() ? 0 : static_cast<int>(probs.front().size()); }
};

struct NMNOutput {
  std::vector<double> dist;  // kNumHypotheses entries summing to 1

  // Lowest index wins ties.
  int argmax() const {
    return static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
  }
  double entropy() const {
    double h = 0;
    for (double p : dist)
      if (p > 0) h -= p * std::log(p);
    return h;
  }
};

// output[k] = sum_j nmn[j] * gpn[j][k]
inline std::vector<double> marginalize(const GPNOutput& gpn, const NMNOutput& nmn) {
  if (gpn.probs.size() != static_cast<std::size_t>(kNumHypotheses) ||
      nmn.dist.size() != static_cast<std::size_t>(kNumHypotheses))
    throw ShapeError("marginalize: expected 9 hypothesis rows and a 9-way distribution");
  const std::size_t n = gpn.probs.front().size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < gpn.probs.size(); ++j) {
    if (gpn.probs[j].size() != n) throw ShapeError("marginalize: ragged GPN output");
    for (std::size_t k = 0; k < n; ++k) out[k] += nmn.dist[j] * gpn.probs[j][k];
  }
  return out;
}

// Binary cross entropy at the executed angle bin.
inline double grasp_loss(std::span<const double> marginal, int executed_bin, bool label) {
  if (executed_bin < 0 || static_cast<std::size_t>(executed_bin) >= marginal.size())
    throw InvalidInput("grasp_loss: bin " + std::to_string(executed_bin) + " out of range");
  const double p = std::clamp(marginal[static_cast<std::size_t>(executed_bin)], kProbabilityClamp,
                              1.0 - kProbabilityClamp);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

// ---------------------------------------------------------------------------
// Configuration

enum class NoiseMode {
  learned,      // GPN (x) NMN, the full model
  center_only,  // NMN frozen to a one-hot on the recorded patch: plain patch grasping
  uniform,      // NMN frozen to 1/9 on every hypothesis
};

inline std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::learned: return "learned";
    case NoiseMode::center_only: return "center_only";
    default: return "uniform";
  }
}

inline NoiseMode noise_mode_from(const std::string& s) {
  if (s == "learned") return NoiseMode::learned;
  if (s == "center_only") return NoiseMode::center_only;
  if (s == "uniform") return NoiseMode::uniform;
  throw InvalidInput("unknown noise mode: " + s);
}

struct ModelConfig {
  int n_bins = 18;
  int patch_size = 32;
  int offset_d = 8;
  int robot_count = 4;
  int scene_size = 256;
  int gpn_input_pool = 1;  // patch box-filtered by this factor before the GPN
  int nmn_scene_side = 32;  // scene box-filtered to this side for the NMN
  std::vector<int> gpn_channels{8, 16, 16};
  std::vector<int> nmn_channels{8, 16};
  int feature_dim = 64;
  int nmn_hidden = 64;
  std::uint64_t seed = 1;

  int gpn_side() const { return patch_size / gpn_input_pool; }
  int scene_pool() const { return scene_size / nmn_scene_side; }

  void validate() const {
    if (n_bins <= 0 || robot_count <= 0 || feature_dim <= 0 || nmn_hidden <= 0)
      throw InvalidInput("model config: sizes must be positive");
    if (patch_size <= 0 || patch_size % 2 != 0) throw InvalidInput("model config: patch size must be even");
    if (offset_d <= 0) throw InvalidInput("model config: offset d must be positive");
    if (gpn_input_pool <= 0 || patch_size % gpn_input_pool != 0)
      throw InvalidInput("model config: gpn_input_pool must divide patch_size");
    if (nmn_scene_side <= 0 || scene_size % nmn_scene_side != 0)
      throw InvalidInput("model config: nmn_scene_side must divide scene_size");
    auto check = [](int side, const std::vector<int>& ch, const char* what) {
      if (ch.empty()) throw InvalidInput(std::string("model config: empty ") + what);
      if (side % (1 << ch.size()) != 0)
        throw InvalidInput(std::string("model config: ") + what + " input side not divisible by pooling");
    };
    check(gpn_side(), gpn_channels, "gpn_channels");
    check(nmn_scene_side, nmn_channels, "nmn_channels");
  }

  static ModelConfig from(const KeyValueConfig& kv) {
    ModelConfig c;
    c.n_bins = kv.get("n_bins", c.n_bins);
    c.patch_size = kv.get("patch_size", c.patch_size);
    c.offset_d = kv.get("offset_d", c.patch_size / 4);
    c.robot_count = kv.get("n_robots", c.robot_count);
    c.scene_size = kv.get("scene_size", c.scene_size);
    c.gpn_input_pool = kv.get("gpn_input_pool", c.gpn_input_pool);
    c.nmn_scene_side = kv.get("nmn_scene_side", c.nmn_scene_side);
    c.gpn_channels = kv.get_list("gpn_channels", c.gpn_channels);
    c.nmn_channels = kv.get_list("nmn_channels", c.nmn_channels);
    c.feature_dim = kv.get("feature_dim", c.feature_dim);
    c.nmn_hidden = kv.get("nmn_hidden", c.nmn_hidden);
    c.seed = static_cast<std::uint64_t>(kv.get("model_seed", static_cast<int>(c.seed)));
    c.validate();
    return c;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// ---------------------------------------------------------------------------
// Input encoding

// Box-filtered crop of `scene` (edge replicated) written as a 3 x side^2
// channel-major block scaled to [-0.5, 0.5].
template <class S>
void encode_crop(const Raster& scene, Pixel center, int size, int pool, S* dst) {
  const int side = size / pool;
  const int x0 = center.x - size / 2, y0 = center.y - size / 2;
  const S scale = S(1) / (S(255) * S(pool * pool));
  for (int py = 0; py < side; ++py)
    for (int px = 0; px < side; ++px) {
      int acc[3] = {0, 0, 0};
      for (int dy = 0; dy < pool; ++dy) {
        const int sy = std::clamp(y0 + py * pool + dy, 0, scene.height - 1);
        for (int dx = 0; dx < pool; ++dx) {
          const int sx = std::clamp(x0 + px * pool + dx, 0, scene.width - 1);
          const auto* p = &scene.data[scene.offset(sx, sy)];
          acc[0] += p[0];
          acc[1] += p[1];
          acc[2] += p[2];
        }
      }
      S* d = dst + (py * side + px) * 3;
      for (int c = 0; c < 3; ++c) d[c] = S(acc[c]) * scale - S(0.5);
    }
}

template <class S>
std::vector<S> encode_scene(const Raster& scene, const ModelConfig& cfg) {
  if (scene.width != cfg.scene_size || scene.height != cfg.scene_size || scene.channels != 3)
    throw ShapeError("scene raster does not match model scene size");
  std::vector<S> out(static_cast<std::size_t>(3 * cfg.nmn_scene_side * cfg.nmn_scene_side));
  encode_crop(scene, Pixel{cfg.scene_size / 2, cfg.scene_size / 2}, cfg.scene_size, cfg.scene_pool(), out.data());
  return out;
}

// One training or query item. `scene_code` is encode_scene(*scene).
template <class S>
struct Sample {
  const Raster* scene = nullptr;
  const S* scene_code = nullptr;
  Pixel location;
  int robot_id = 0;
  int bin = 0;
  bool label = false;
};

template <class S>
nn::Sequential<S> make_backbone(int side, const std::vector<int>& channels, int feature_dim, Rng& rng) {
  nn::Sequential<S> net;
  int in = 3;
  for (int c : channels) {
    net.template add<nn::Conv2d<S>>(in, c, 3, rng, in != 3 || net.size() != 0);
    net.template add<nn::Relu<S>>();
    net.template add<nn::MaxPool2<S>>();
    in = c;
    side /= 2;
  }
  net.template add<nn::Flatten<S>>();
  net.template add<nn::Dense<S>>(in * side * side, feature_dim, rng);
  net.template add<nn::Relu<S>>();
  return net;
}

template <class S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

// ---------------------------------------------------------------------------
// Model

template <class S>
class RobustGraspModel {
 public:
  using Mat = nn::Matrix<S>;
  using Tensor = nn::Tensor<S>;

  explicit RobustGraspModel(ModelConfig cfg, NoiseMode mode = NoiseMode::learned)
      : cfg_(std::move(cfg)), mode_(mode) {
    cfg_.validate();
    Rng rng(derive_seed(cfg_.seed, 0x6e6eULL));
    gpn_ = make_backbone<S>(cfg_.gpn_side(), cfg_.gpn_channels, cfg_.feature_dim, rng);
    gpn_.template add<nn::Dense<S>>(cfg_.feature_dim, cfg_.n_bins, rng);
    nmn_backbone_ = make_backbone<S>(cfg_.nmn_scene_side, cfg_.nmn_channels, cfg_.feature_dim, rng);
    nmn_head_.template add<nn::Dense<S>>(nmn_input_width(), cfg_.nmn_hidden, rng);
    nmn_head_.template add<nn::Relu<S>>();
    nmn_head_.template add<nn::Dense<S>>(cfg_.nmn_hidden, cfg_.nmn_hidden, rng);
    nmn_head_.template add<nn::Relu<S>>();
    nmn_head_.template add<nn::Dense<S>>(cfg_.nmn_hidden, kNumHypotheses, rng);
    offsets_ = hypothesis_offsets(cfg_.offset_d);
    // NMN starts uniform; GPN starts near p = 0.5.
    nmn_output_layer().weight().setZero();
    gpn_output_layer().weight() *= S(0.1);
  }

  const ModelConfig& config() const { return cfg_; }
  AngleBinning binning() const { return AngleBinning(cfg_.n_bins); }
  const std::array<Pixel, kNumHypotheses>& offsets() const { return offsets_; }
  NoiseMode noise_mode() const { return mode_; }
  void set_noise_mode(NoiseMode m) { mode_ = m; }

  std::vector<nn::ParamBlock<S>> gpn_params() { return gpn_.params(); }
  std::vector<nn::ParamBlock<S>> nmn_params() {
    auto p = nmn_backbone_.params();
    for (auto& q : nmn_head_.params()) p.push_back(q);
    return p;
  }
  std::vector<nn::ParamBlock<S>> params() {
    auto p = gpn_params();
    for (auto& q : nmn_params()) p.push_back(q);
    return p;
  }

  nn::Dense<S>& gpn_output_layer() { return static_cast<nn::Dense<S>&>(gpn_.layer(gpn_.size() - 1)); }
  nn::Dense<S>& nmn_output_layer() { return static_cast<nn::Dense<S>&>(nmn_head_.layer(nmn_head_.size() - 1)); }

  // ---- inference ---------------------------------------------------------

  // Success probabilities for each patch: rows = patches, cols = bins.
  GPNOutput gpn_forward(std::span<const Raster> patches) const {
    if (patches.empty()) throw ShapeError("gpn_forward: no patches");
    const int side = cfg_.gpn_side();
    Tensor x{Mat(3, static_cast<Eigen::Index>(patches.size()) * side * side), static_cast<int>(patches.size()), side,
             side};
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const auto& p = patches[i];
      if (p.width != cfg_.patch_size || p.height != cfg_.patch_size || p.channels != 3)
        throw ShapeError("gpn_forward: patch size mismatch");
      encode_crop(p, Pixel{p.width / 2, p.height / 2}, cfg_.patch_size, cfg_.gpn_input_pool,
                  x.data.data() + static_cast<Eigen::Index>(i) * 3 * side * side);
    }
    const Mat logits = gpn_.infer(x).data;
    GPNOutput out;
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(cfg_.n_bins));
      for (int k = 0; k < cfg_.n_bins; ++k) row[static_cast<std::size_t>(k)] = static_cast<double>(sigmoid(logits(k, i)));
      out.probs.push_back(std::move(row));
    }
    return out;
  }

  GPNOutput gpn_forward(const PatchSet& set) const { return gpn_forward(std::span<const Raster>(set.patches)); }

  // Patch distribution under the model's noise mode. Does not look at the
  // patch or the angle.
  NMNOutput nmn_forward(const RobotContext& ctx, const Raster& scene) const {
    if (ctx.robot_id < 0 || ctx.robot_id >= cfg_.robot_count)
      throw InvalidInput("nmn_forward: robot id " + std::to_string(ctx.robot_id) + " out of range");
    const auto code = encode_scene<S>(scene, cfg_);
    Sample<S> s{&scene, code.data(), ctx.pixel_location, ctx.robot_id, 0, false};
    const Mat w = noise_distribution(std::span<const Sample<S>>(&s, 1));
    NMNOutput out;
    for (int j = 0; j < kNumHypotheses; ++j) out.dist.push_back(static_cast<double>(w(j, 0)));
    return out;
  }

  // Marginal success probability per bin for each sample: n_bins x B.
  Mat marginal(std::span<const Sample<S>> batch) const {
    const int per = patches_per_sample();
    Tensor x = patch_tensor(batch, per);
    Mat probs = gpn_.infer(x).data.unaryExpr([](S v) { return sigmoid(v); });
    const Mat w = noise_distribution(batch);
    Mat out = Mat::Zero(cfg_.n_bins, static_cast<Eigen::Index>(batch.size()));
    for (Eigen::Index b = 0; b < out.cols(); ++b)
      for (int j = 0; j < per; ++j) out.col(b) += w(j, b) * probs.col(b * per + j);
    return out;
  }

  // kNumHypotheses x B
  Mat noise_distribution(std::span<const Sample<S>> batch) const {
    const auto n = static_cast<Eigen::Index>(batch.size());
    if (mode_ == NoiseMode::center_only) {
      Mat w = Mat::Zero(kNumHypotheses, n);
      w.row(0).setOnes();
      return w;
    }
    if (mode_ == NoiseMode::uniform) return Mat::Constant(kNumHypotheses, n, S(1) / S(kNumHypotheses));
    const Tensor feat = nmn_backbone_.infer(scene_tensor(batch));
    return softmax(nmn_head_.infer(context_tensor(batch, feat.data)).data);
  }

  // ---- training ----------------------------------------------------------

  struct BatchResult {
    S loss = 0;             // mean BCE over the batch
    S mean_entropy = 0;     // mean entropy of the patch distribution
  };

  // Mean loss over the batch; when `with_grad` adds d(loss)/d(params) into
  // the gradient buffers of the GPN and, in learned mode, the NMN.
  BatchResult loss_and_grad(std::span<const Sample<S>> batch, bool with_grad = true) {
    if (batch.empty()) throw InvalidInput("loss_and_grad: empty batch");
    const int per = patches_per_sample();
    const auto n = static_cast<Eigen::Index>(batch.size());
    Tensor x = patch_tensor(batch, per);
    const Tensor logits = with_grad ? gpn_.forward(x) : gpn_.infer(x);
    const Mat probs = logits.data.unaryExpr([](S v) { return sigmoid(v); });

    Mat w;
    Tensor feat;
    if (mode_ == NoiseMode::learned) {
      feat = with_grad ? nmn_backbone_.forward(scene_tensor(batch)) : nmn_backbone_.infer(scene_tensor(batch));
      Tensor ctx = context_tensor(batch, feat.data);
      w = softmax((with_grad ? nmn_head_.forward(ctx) : nmn_head_.infer(ctx)).data);
    } else {
      w = noise_distribution(batch);
    }

    BatchResult result;
    Mat dlogits = Mat::Zero(probs.rows(), probs.cols());
    Mat dz = Mat::Zero(kNumHypotheses, n);
    const S inv_n = S(1) / S(n);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& s = batch[static_cast<std::size_t>(b)];
      if (s.bin < 0 || s.bin >= cfg_.n_bins) throw InvalidInput("loss_and_grad: bin out of range");
      S p = 0;
      for (int j = 0; j < per; ++j) p += w(j, b) * probs(s.bin, b * per + j);
      const S lo = S(kProbabilityClamp), hi = S(1) - S(kProbabilityClamp);
      const S pc = std::clamp(p, lo, hi);
      result.loss += (s.label ? -std::log(pc) : -std::log(S(1) - pc)) * inv_n;
      for (int j = 0; j < kNumHypotheses; ++j)
        if (w(j, b) > S(0)) result.mean_entropy -= w(j, b) * std::log(w(j, b)) * inv_n;
      if (!with_grad || p < lo || p > hi) continue;
      const S dp = (s.label ? -S(1) / p : S(1) / (S(1) - p)) * inv_n;
      for (int j = 0; j < per; ++j) {
        const S q = probs(s.bin, b * per + j);
        dlogits(s.bin, b * per + j) = dp * w(j, b) * q * (S(1) - q);
      }
      if (mode_ == NoiseMode::learned) {
        S dot = 0;
        for (int j = 0; j < kNumHypotheses; ++j) dot += w(j, b) * dp * probs(s.bin, b * per + j);
        for (int j = 0; j < kNumHypotheses; ++j) dz(j, b) = w(j, b) * (dp * probs(s.bin, b * per + j) - dot);
      }
    }
    if (with_grad) {
      gpn_.backward(Tensor{dlogits, logits.batch, 1, 1});
      if (mode_ == NoiseMode::learned) {
        const Tensor dctx = nmn_head_.backward(Tensor{dz, static_cast<int>(n), 1, 1});
        Tensor dfeat{dctx.data.topRows(cfg_.feature_dim), static_cast<int>(n), 1, 1};
        nmn_backbone_.backward(dfeat);
      }
    }
    return result;
  }

  int patches_per_sample() const { return mode_ == NoiseMode::center_only ? 1 : kNumHypotheses; }

 private:
  int nmn_input_width() const { return cfg_.feature_dim + cfg_.robot_count + 2; }

  Tensor patch_tensor(std::span<const Sample<S>> batch, int per) const {
    const int side = cfg_.gpn_side();
    const auto block = static_cast<Eigen::Index>(3) * side * side;
    Tensor x{Mat(3, static_cast<Eigen::Index>(batch.size()) * per * side * side),
             static_cast<int>(batch.size()) * per, side, side};
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& s = batch[b];
      if (!s.scene) throw InvalidInput("sample without scene");
      for (int j = 0; j < per; ++j) {
        const Pixel c{s.location.x + offsets_[static_cast<std::size_t>(j)].x,
                      s.location.y + offsets_[static_cast<std::size_t>(j)].y};
        encode_crop(*s.scene, c, cfg_.patch_size, cfg_.gpn_input_pool,
                    x.data.data() + (static_cast<Eigen::Index>(b) * per + j) * block);
      }
    }
    return x;
  }

  Tensor scene_tensor(std::span<const Sample<S>> batch) const {
    const int side = cfg_.nmn_scene_side;
    const auto block = static_cast<Eigen::Index>(3) * side * side;
    Tensor x{Mat(3, static_cast<Eigen::Index>(batch.size()) * side * side), static_cast<int>(batch.size()), side,
             side};
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (!batch[b].scene_code) throw InvalidInput("sample without encoded scene");
      std::copy_n(batch[b].scene_code, block, x.data.data() + static_cast<Eigen::Index>(b) * block);
    }
    return x;
  }

  // [scene feature; robot one-hot; normalized pixel location]
  Tensor context_tensor(std::span<const Sample<S>> batch, const Mat& feat) const {
    Tensor x{Mat::Zero(nmn_input_width(), static_cast<Eigen::Index>(batch.size())), static_cast<int>(batch.size()), 1,
             1};
    x.data.topRows(cfg_.feature_dim) = feat;
    const S denom = S(std::max(1, cfg_.scene_size - 1));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& s = batch[b];
      if (s.robot_id < 0 || s.robot_id >= cfg_.robot_count)
        throw InvalidInput("robot id " + std::to_string(s.robot_id) + " out of range");
      const auto col = static_cast<Eigen::Index>(b);
      x.data(cfg_.feature_dim + s.robot_id, col) = S(1);
      x.data(cfg_.feature_dim + cfg_.robot_count, col) = S(s.location.x) / denom;
      x.data(cfg_.feature_dim + cfg_.robot_count + 1, col) = S(s.location.y) / denom;
    }
    return x;
  }

  static Mat softmax(const Mat& z) {
    Mat w(z.rows(), z.cols());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const S m = z.col(c).maxCoeff();
      w.col(c) = (z.col(c).array() - m).exp().matrix();
      w.col(c) /= w.col(c).sum();
    }
    return w;
  }

  ModelConfig cfg_;
  NoiseMode mode_;
  nn::Sequential<S> gpn_;
  nn::Sequential<S> nmn_backbone_;
  nn::Sequential<S> nmn_head_;
  std::array<Pixel, kNumHypotheses> offsets_{};
};

// ---------------------------------------------------------------------------
// Queries on a trained model

template <class S>
struct BestGrasp {
  GraspConfig grasp;
  double probability = 0;
  int center_index = 0;
  int bin = 0;
};

// Highest marginal success over all candidate centers and angle bins.
template <class S>
BestGrasp<S> predict_best_grasp(const RobustGraspModel<S>& model, const Raster& scene,
                                std::span<const Pixel> candidate_centers, int robot_id) {
  if (candidate_centers.empty()) throw InvalidInput("predict_best_grasp: no candidate centers");
  const auto code = encode_scene<S>(scene, model.config());
  std::vector<Sample<S>> batch;
  for (const auto& c : candidate_centers) {
    if (!scene.contains(c.x, c.y)) throw InvalidInput("predict_best_grasp: candidate outside scene");
    batch.push_back({&scene, code.data(), c, robot_id, 0, false});
  }
  BestGrasp<S> best;
  best.probability = -1;
  constexpr std::size_t kChunk = 64;
  const AngleBinning binning = model.binning();
  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, batch.size() - start);
    const auto m = model.marginal(std::span<const Sample<S>>(batch.data() + start, len));
    for (std::size_t i = 0; i < len; ++i)
      for (int k = 0; k < binning.n_bins(); ++k) {
        const double p = static_cast<double>(m(k, static_cast<Eigen::Index>(i)));
        if (p > best.probability) {
          best.probability = p;
          best.center_index = static_cast<int>(start + i);
          best.bin = k;
        }
      }
  }
  const Pixel c = candidate_centers[static_cast<std::size_t>(best.center_index)];
  best.grasp = {double(c.x), double(c.y), binning.bin_center(best.bin)};
  return best;
}

struct CorrectionVector {
  Pixel pixel;
  Pixel displacement;
  int hypothesis = 0;
};

// Offset of the most probable execution patch at each grid pixel.
template <class S>
std::vector<CorrectionVector> noise_correction_field(const RobustGraspModel<S>& model, const Raster& scene,
                                                     int robot_id, std::span<const Pixel> grid) {
  const auto code = encode_scene<S>(scene, model.config());
  std::vector<Sample<S>> batch;
  for (const auto& p : grid) batch.push_back({&scene, code.data(), p, robot_id, 0, false});
  std::vector<CorrectionVector> out;
  if (batch.empty()) return out;
  const auto w = model.noise_distribution(batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    int best = 0;
    for (int j = 1; j < kNumHypotheses; ++j)
      if (w(j, static_cast<Eigen::Index>(i)) > w(best, static_cast<Eigen::Index>(i))) best = j;
    out.push_back({grid[i], model.offsets()[static_cast<std::size_t>(best)], best});
  }
  return out;
}

// Regular n x n grid of pixel centers covering a square scene.
inline std::vector<Pixel> probe_grid(int scene_size, int n) {
  std::vector<Pixel> grid;
  for (int gy = 0; gy < n; ++gy)
    for (int gx = 0; gx < n; ++gx)
      grid.push_back({static_cast<int>((gx + 0.5) * scene_size / n), static_cast<int>((gy + 0.5) * scene_size / n)});
  return grid;
}

}  // namespace robust_grasp
