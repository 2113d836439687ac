#pragma once

// Checkpoint archive:
//   "RGCKPT\0\0" | u32 format_version | u64 header_len | JSON header | raw parameters
// The header records the model geometry, noise mode, scalar type and the
// shape of every parameter block in order. Integers are little-endian.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "model.hpp"

namespace robust_grasp {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'R', 'G', 'C', 'K', 'P', 'T', 0, 0};

struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class S>
constexpr const char* scalar_name() {
  return sizeof(S) == 4 ? "f32" : "f64";
}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"n_bins", c.n_bins},
          {"patch_size", c.patch_size},
          {"offset_d", c.offset_d},
          {"robot_count", c.robot_count},
          {"scene_size", c.scene_size},
          {"gpn_input_pool", c.gpn_input_pool},
          {"nmn_scene_side", c.nmn_scene_side},
          {"gpn_channels", c.gpn_channels},
          {"nmn_channels", c.nmn_channels},
          {"feature_dim", c.feature_dim},
          {"nmn_hidden", c.nmn_hidden},
          {"seed", c.seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_bins = j.at("n_bins");
  c.patch_size = j.at("patch_size");
  c.offset_d = j.at("offset_d");
  c.robot_count = j.at("robot_count");
  c.scene_size = j.at("scene_size");
  c.gpn_input_pool = j.at("gpn_input_pool");
  c.nmn_scene_side = j.at("nmn_scene_side");
  c.gpn_channels = j.at("gpn_channels").get<std::vector<int>>();
  c.nmn_channels = j.at("nmn_channels").get<std::vector<int>>();
  c.feature_dim = j.at("feature_dim");
  c.nmn_hidden = j.at("nmn_hidden");
  c.seed = j.at("seed");
  c.validate();
  return c;
}

namespace detail {

inline void put_u32(std::ostream& o, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::ostream& o, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw LoadError("checkpoint truncated in fixed header");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

template <class S>
std::string serialize_checkpoint(RobustGraspModel<S>& model, const nlohmann::json& extra = {}) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["scalar"] = scalar_name<S>();
  header["model"] = to_json(model.config());
  header["noise_mode"] = to_string(model.noise_mode());
  header["angle_bins"] = model.config().n_bins;
  header["patch_geometry"] = {{"size", model.config().patch_size}, {"d", model.config().offset_d}};
  header["robot_count"] = model.config().robot_count;
  auto blocks = nlohmann::json::array();
  for (const auto& p : model.params()) blocks.push_back({{"name", p.name}, {"rows", p.value->rows()}, {"cols", p.value->cols()}});
  header["blocks"] = blocks;
  if (!extra.is_null()) header["extra"] = extra;
  const std::string text = header.dump();

  std::ostringstream out(std::ios::binary);
  out.write(kCheckpointMagic, 8);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.params())
    out.write(reinterpret_cast<const char*>(p.value->data()), static_cast<std::streamsize>(p.value->size() * sizeof(S)));
  return out.str();
}

template <class S>
void save_checkpoint(RobustGraspModel<S>& model, const std::string& path, const nlohmann::json& extra = {}) {
  const auto bytes = serialize_checkpoint(model, extra);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to checkpoint: " + path);
}

struct CheckpointInfo {
  nlohmann::json header;
};

template <class S>
RobustGraspModel<S> deserialize_checkpoint(const std::string& bytes, CheckpointInfo* info = nullptr) {
  std::istringstream in(bytes, std::ios::binary);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw LoadError("not a checkpoint archive");
  const auto version = static_cast<std::uint32_t>(detail::get_uint(in, 4));
  if (version != kCheckpointVersion)
    throw UnsupportedVersion("checkpoint format version " + std::to_string(version) + " is not supported");
  const auto len = detail::get_uint(in, 8);
  if (len > bytes.size()) throw LoadError("checkpoint header length exceeds file size");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw LoadError("checkpoint truncated in header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  const bool f32 = header.at("scalar") == "f32";
  RobustGraspModel<S> model(model_config_from_json(header.at("model")), noise_mode_from(header.at("noise_mode")));
  auto params = model.params();
  const auto& blocks = header.at("blocks");
  if (blocks.size() != params.size()) throw LoadError("checkpoint parameter layout does not match model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (blocks[i].at("rows") != p.value->rows() || blocks[i].at("cols") != p.value->cols())
      throw LoadError("checkpoint block " + std::to_string(i) + " has the wrong shape");
    const auto n = static_cast<std::size_t>(p.value->size());
    if (f32) {
      std::vector<float> buf(n);
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float))))
        throw LoadError("checkpoint truncated in block " + std::to_string(i));
      for (std::size_t k = 0; k < n; ++k) p.value->data()[k] = static_cast<S>(buf[k]);
    } else {
      std::vector<double> buf(n);
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(double))))
        throw LoadError("checkpoint truncated in block " + std::to_string(i));
      for (std::size_t k = 0; k < n; ++k) p.value->data()[k] = static_cast<S>(buf[k]);
    }
  }
  if (in.peek() != EOF) throw LoadError("trailing bytes after checkpoint parameters");
  if (info) info->header = header;
  return model;
}

template <class S>
RobustGraspModel<S> load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint<S>(ss.str(), info);
}

}  // namespace robust_grasp
