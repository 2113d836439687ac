#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace robust_grasp {

// ---------------------------------------------------------------------------
// Errors

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptDataset : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedVersion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr int kNumHypotheses = 9;

// ---------------------------------------------------------------------------
// Geometry

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Reduces any finite angle into [0, pi).
inline double wrap_half_turn(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t = 0.0;
  return t;
}

// Distance between two undirected line orientations, in [0, pi/2].
inline double half_turn_distance(double a, double b) {
  const double d = wrap_half_turn(a - b);
  return std::min(d, kPi - d);
}

// Planar parallel-jaw grasp in scene pixel coordinates.
struct GraspConfig {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // roll, kept in [0, pi)

  friend bool operator==(const GraspConfig&, const GraspConfig&) = default;
};

class AngleBinning {
 public:
  explicit AngleBinning(int n_bins = 18) : n_bins_(n_bins) {
    if (n_bins <= 0) throw InvalidInput("AngleBinning: n_bins must be positive");
  }

  int n_bins() const { return n_bins_; }
  double bin_width() const { return kPi / n_bins_; }
  double bin_center(int bin) const { return (bin + 0.5) * bin_width(); }

  friend bool operator==(const AngleBinning&, const AngleBinning&) = default;

 private:
  int n_bins_;
};

inline int discretize_angle(double theta, const AngleBinning& binning) {
  if (!std::isfinite(theta)) throw InvalidInput("discretize_angle: non-finite angle");
  const double t = wrap_half_turn(theta);
  const int bin = static_cast<int>(std::floor(t / binning.bin_width()));
  return std::clamp(bin, 0, binning.n_bins() - 1);
}

// ---------------------------------------------------------------------------
// Rasters

// Interleaved 8-bit image, row-major, `channels` values per pixel.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Raster() = default;
  Raster(int w, int h, int c = 3, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * channels;
  }
  std::uint8_t& at(int x, int y, int c) { return data[offset(x, y) + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[offset(x, y) + c]; }

  bool empty() const { return data.empty(); }

  friend bool operator==(const Raster&, const Raster&) = default;
};

namespace detail {

// Crop with edge replication; `center` may lie anywhere.
inline Raster crop_replicated(const Raster& scene, Pixel center, int size) {
  Raster out(size, size, scene.channels);
  const int x0 = center.x - size / 2;
  const int y0 = center.y - size / 2;
  for (int y = 0; y < size; ++y) {
    const int sy = std::clamp(y0 + y, 0, scene.height - 1);
    for (int x = 0; x < size; ++x) {
      const int sx = std::clamp(x0 + x, 0, scene.width - 1);
      const auto* src = &scene.data[scene.offset(sx, sy)];
      auto* dst = &out.data[out.offset(x, y)];
      for (int c = 0; c < scene.channels; ++c) dst[c] = src[c];
    }
  }
  return out;
}

}  // namespace detail

// size x size crop spanning [center - size/2, center + size/2).
inline Raster extract_patch(const Raster& scene, Pixel center, int size) {
  if (size <= 0 || size % 2 != 0)
    throw InvalidInput("extract_patch: size must be positive and even");
  if (!scene.contains(center.x, center.y))
    throw InvalidInput("extract_patch: center outside scene");
  return detail::crop_replicated(scene, center, size);
}

// Box-filter downsample by an integer factor (dimensions must divide).
inline Raster downsample(const Raster& in, int factor) {
  if (factor <= 0 || in.width % factor != 0 || in.height % factor != 0)
    throw ShapeError("downsample: factor must divide raster dimensions");
  if (factor == 1) return in;
  Raster out(in.width / factor, in.height / factor, in.channels);
  const int area = factor * factor;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < in.channels; ++c) {
        int sum = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            sum += in.at(x * factor + dx, y * factor + dy, c);
        out.at(x, y, c) = static_cast<std::uint8_t>((sum + area / 2) / area);
      }
  return out;
}

// ---------------------------------------------------------------------------
// Latent patch hypotheses

struct PatchSet {
  std::array<Raster, kNumHypotheses> patches;
  std::array<Pixel, kNumHypotheses> offsets;
};

// (0,0) followed by the eight compass directions at Euclidean radius d,
// counter-clockwise starting from +x. Diagonals are rounded to whole pixels.
inline std::array<Pixel, kNumHypotheses> hypothesis_offsets(int d) {
  if (d <= 0) throw InvalidInput("hypothesis offsets: d must be positive");
  const int diag = static_cast<int>(std::lround(d / std::numbers::sqrt2));
  return {Pixel{0, 0},     Pixel{d, 0},      Pixel{diag, diag}, Pixel{0, d},
          Pixel{-diag, diag}, Pixel{-d, 0},  Pixel{-diag, -diag}, Pixel{0, -d},
          Pixel{diag, -diag}};
}

inline PatchSet candidate_patches(const Raster& scene, Pixel center, int size, int d) {
  PatchSet set;
  set.offsets = hypothesis_offsets(d);
  set.patches[0] = extract_patch(scene, center, size);
  for (int k = 1; k < kNumHypotheses; ++k) {
    const Pixel c{center.x + set.offsets[k].x, center.y + set.offsets[k].y};
    set.patches[k] = detail::crop_replicated(scene, c, size);
  }
  return set;
}

// ---------------------------------------------------------------------------
// Records

struct RobotContext {
  int robot_id = 0;
  Pixel pixel_location;
  int scene_id = -1;  // index of the full scene raster in its dataset

  friend bool operator==(const RobotContext&, const RobotContext&) = default;
};

inline std::vector<float> one_hot(int robot_id, int robot_count) {
  if (robot_id < 0 || robot_id >= robot_count)
    throw InvalidInput("robot id " + std::to_string(robot_id) + " outside [0, " +
                       std::to_string(robot_count) + ")");
  std::vector<float> v(static_cast<std::size_t>(robot_count), 0.0f);
  v[static_cast<std::size_t>(robot_id)] = 1.0f;
  return v;
}

struct GraspRecord {
  Raster scene_image;
  Raster patch;
  GraspConfig grasp;
  bool success = false;
  RobotContext context;

  friend bool operator==(const GraspRecord&, const GraspRecord&) = default;
};

inline Pixel to_pixel(const GraspConfig& g) {
  return {static_cast<int>(std::lround(g.x)), static_cast<int>(std::lround(g.y))};
}

}  // namespace robust_grasp
