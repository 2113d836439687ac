#pragma once

// On-disk dataset layout:
//
//   <dir>/manifest.json          format version, counts, split, noise fleet,
//                                 and an FNV-1a digest of every data file
//   <dir>/records.jsonl          one JSON object per record
//   <dir>/scenes/scene_NNNNNN.bin  "RGSC" | u32 version | u32 w | u32 h | u32 c | bytes
//
// Writers hold <dir>/.lock for the duration of a write.

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hash.hpp"
#include "simworld.hpp"

namespace robust_grasp {

inline constexpr int kDatasetFormatVersion = 1;

struct CorruptRecord : CorruptDataset {
  CorruptRecord(std::size_t idx, const std::string& what)
      : CorruptDataset("corrupt record " + std::to_string(idx) + ": " + what), index(idx) {}
  std::size_t index;
};

struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  std::size_t record_count = 0;
  std::size_t scene_count = 0;
  int patch_size = 32;
  std::vector<int> robot_ids;
  std::vector<std::uint64_t> scene_seeds;
  std::string noise_fingerprint;
  std::string split = "train";
  std::map<std::string, std::string> file_digests;  // relative path -> hex digest
  nlohmann::json noise;                             // serialized fleet
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

inline nlohmann::json to_json(const NoiseTransform& t) {
  return {{"robot_id", t.robot_id}, {"affine", t.affine},   {"offset", t.offset},
          {"field_x", t.field_x},   {"field_y", t.field_y}, {"scene_size", t.scene_size}};
}

inline NoiseTransform noise_from_json(const nlohmann::json& j) {
  NoiseTransform t;
  t.robot_id = j.at("robot_id");
  t.affine = j.at("affine").get<std::array<double, 4>>();
  t.offset = j.at("offset").get<std::array<double, 2>>();
  t.field_x = j.at("field_x").get<std::array<double, 3>>();
  t.field_y = j.at("field_y").get<std::array<double, 3>>();
  t.scene_size = j.at("scene_size");
  return t;
}

inline nlohmann::json fleet_json(const std::map<int, NoiseTransform>& fleet) {
  auto arr = nlohmann::json::array();
  for (const auto& [id, t] : fleet) arr.push_back(to_json(t));
  return arr;
}

inline std::string noise_fingerprint(const std::map<int, NoiseTransform>& fleet) {
  return hex64(fnv1a(fleet_json(fleet).dump()));
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json files = nlohmann::json::object();
  for (const auto& [k, v] : m.file_digests) files[k] = v;
  return {{"format_version", m.format_version},
          {"record_count", m.record_count},
          {"scene_count", m.scene_count},
          {"patch_size", m.patch_size},
          {"robot_ids", m.robot_ids},
          {"scene_seeds", m.scene_seeds},
          {"noise_fingerprint", m.noise_fingerprint},
          {"split", m.split},
          {"files", files},
          {"noise", m.noise}};
}

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + p.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + p.string());
}

inline std::string scene_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scenes/scene_%06zu.bin", i);
  return buf;
}

inline void append_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t read_u32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
  return v;
}

inline std::string encode_scene_blob(const Raster& r) {
  std::string s = "RGSC";
  append_u32(s, 1);
  append_u32(s, static_cast<std::uint32_t>(r.width));
  append_u32(s, static_cast<std::uint32_t>(r.height));
  append_u32(s, static_cast<std::uint32_t>(r.channels));
  s.append(reinterpret_cast<const char*>(r.data.data()), r.data.size());
  return s;
}

inline Raster decode_scene_blob(const std::string& s, std::size_t index) {
  if (s.size() < 20 || s.compare(0, 4, "RGSC") != 0)
    throw CorruptDataset("scene " + std::to_string(index) + ": bad header");
  if (read_u32(s, 4) != 1) throw UnsupportedVersion("scene blob version " + std::to_string(read_u32(s, 4)));
  Raster r(static_cast<int>(read_u32(s, 8)), static_cast<int>(read_u32(s, 12)), static_cast<int>(read_u32(s, 16)));
  if (s.size() != 20 + r.data.size())
    throw CorruptDataset("scene " + std::to_string(index) + ": truncated raster (" + std::to_string(s.size() - 20) +
                         " of " + std::to_string(r.data.size()) + " bytes)");
  std::copy(s.begin() + 20, s.end(), reinterpret_cast<char*>(r.data.data()));
  return r;
}

}  // namespace detail

// Exclusive writer lock on a dataset directory.
class DatasetLock {
 public:
  explicit DatasetLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw IoError("dataset is locked or not writable: " + path_.string());
  }
  ~DatasetLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }
  DatasetLock(const DatasetLock&) = delete;
  DatasetLock& operator=(const DatasetLock&) = delete;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

inline nlohmann::json record_json(const RecordEntry& r, std::size_t index) {
  return {{"index", index},         {"scene", r.scene_id},      {"x", r.grasp.x},
          {"y", r.grasp.y},         {"theta", r.grasp.theta},   {"success", r.success},
          {"robot", r.robot_id},    {"exec_x", r.executed.x},   {"exec_y", r.executed.y},
          {"exec_theta", r.executed.theta}};
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "scenes", ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
  DatasetLock lock(dir);

  DatasetManifest m;
  m.record_count = ds.records.size();
  m.scene_count = ds.scenes.size();
  m.patch_size = ds.patch_size;
  m.robot_ids = ds.robot_ids();
  m.scene_seeds = ds.scene_seeds;
  m.split = ds.split;
  m.noise = fleet_json(ds.noise);
  m.noise_fingerprint = noise_fingerprint(ds.noise);

  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    const auto blob = detail::encode_scene_blob(ds.scenes[i]);
    const auto name = detail::scene_file_name(i);
    detail::write_file(dir / name, blob);
    m.file_digests[name] = hex64(fnv1a(blob));
  }
  std::string lines;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    lines += record_json(ds.records[i], i).dump();
    lines += '\n';
  }
  detail::write_file(dir / "records.jsonl", lines);
  m.file_digests["records.jsonl"] = hex64(fnv1a(lines));
  detail::write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

inline DatasetManifest read_manifest(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataset(std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version");
    if (m.format_version != kDatasetFormatVersion)
      throw UnsupportedVersion("dataset format version " + std::to_string(m.format_version) +
                               " is not supported (expected " + std::to_string(kDatasetFormatVersion) + ")");
    m.record_count = j.at("record_count");
    m.scene_count = j.at("scene_count");
    m.patch_size = j.at("patch_size");
    m.robot_ids = j.at("robot_ids").get<std::vector<int>>();
    m.scene_seeds = j.at("scene_seeds").get<std::vector<std::uint64_t>>();
    m.noise_fingerprint = j.at("noise_fingerprint");
    m.split = j.at("split");
    for (const auto& [k, v] : j.at("files").items()) m.file_digests[k] = v.get<std::string>();
    m.noise = j.at("noise");
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataset(std::string("manifest field error: ") + e.what());
  }
  return m;
}

// Re-hashes every file listed in the manifest.
inline void verify_dataset(const std::filesystem::path& dir) {
  const auto m = read_manifest(dir);
  for (const auto& [name, digest] : m.file_digests) {
    if (!std::filesystem::exists(dir / name)) throw CorruptDataset("missing dataset file " + name);
    if (hex64(fnv1a(detail::read_file(dir / name))) != digest)
      throw CorruptDataset("digest mismatch for " + name);
  }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  const auto m = read_manifest(dir);
  Dataset ds;
  ds.split = m.split;
  ds.patch_size = m.patch_size;
  ds.scene_seeds = m.scene_seeds;
  try {
    for (const auto& t : m.noise) {
      auto nt = noise_from_json(t);
      ds.noise.emplace(nt.robot_id, nt);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptDataset(std::string("manifest noise block: ") + e.what());
  }
  if (noise_fingerprint(ds.noise) != m.noise_fingerprint) throw CorruptDataset("noise fingerprint mismatch");

  for (std::size_t i = 0; i < m.scene_count; ++i) {
    const auto name = detail::scene_file_name(i);
    if (!std::filesystem::exists(dir / name)) throw CorruptDataset("missing scene file " + name);
    ds.scenes.push_back(detail::decode_scene_blob(detail::read_file(dir / name), i));
  }

  std::istringstream in(detail::read_file(dir / "records.jsonl"));
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RecordEntry r;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.at("index").get<std::size_t>() != index) throw CorruptRecord(index, "out-of-order index");
      r.scene_id = j.at("scene");
      r.grasp = {j.at("x"), j.at("y"), j.at("theta")};
      r.success = j.at("success");
      r.robot_id = j.at("robot");
      r.executed = {j.at("exec_x"), j.at("exec_y"), j.at("exec_theta")};
    } catch (const nlohmann::json::exception& e) {
      throw CorruptRecord(index, e.what());
    }
    if (r.scene_id < 0 || static_cast<std::size_t>(r.scene_id) >= ds.scenes.size())
      throw CorruptRecord(index, "scene id out of range");
    ds.records.push_back(r);
    ++index;
  }
  if (ds.records.size() != m.record_count)
    throw CorruptDataset("manifest lists " + std::to_string(m.record_count) + " records but " +
                         std::to_string(ds.records.size()) + " are on disk");
  verify_dataset(dir);
  return ds;
}

}  // namespace robust_grasp
