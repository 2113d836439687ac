#include <gtest/gtest.h>

#include <fstream>

#include "robust_grasp/checkpoint.hpp"
#include "robust_grasp/dataset_io.hpp"
#include "tiny_model.hpp"

using namespace robust_grasp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rg_persist_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << s;
}

GenerateConfig small_gen(std::uint64_t seed) {
  GenerateConfig g;
  g.world.seed = seed;
  g.n_scenes = 25;
  g.grasps_per_scene = 40;
  return g;
}

// Arbitrary datasets, including values the generator never produces.
Dataset random_dataset(Rng& rng) {
  Dataset ds;
  ds.split = rng.bernoulli(0.5) ? "train" : "heldout";
  ds.patch_size = 2 * rng.integer(1, 40);
  const int n_scenes = rng.integer(1, 4);
  for (int s = 0; s < n_scenes; ++s) {
    Raster r(rng.integer(1, 20), rng.integer(1, 20), rng.bernoulli(0.5) ? 3 : 1);
    for (auto& v : r.data) v = static_cast<std::uint8_t>(rng.index(256));
    ds.scenes.push_back(r);
    ds.scene_seeds.push_back(rng.next());
  }
  const int robots = rng.integer(1, 5);
  for (int r = 0; r < robots; ++r) {
    auto t = NoiseTransform::identity(r, rng.uniform(1, 1000));
    for (auto& v : t.affine) v = rng.normal(0, 3);
    for (auto& v : t.offset) v = rng.normal(0, 30);
    for (auto& v : t.field_x) v = rng.normal(0, 1e-3);
    for (auto& v : t.field_y) v = rng.normal(0, 1e5);
    ds.noise.emplace(r, t);
  }
  const int n = rng.integer(0, 60);
  for (int i = 0; i < n; ++i) {
    RecordEntry e;
    e.scene_id = rng.index(n_scenes);
    e.grasp = {rng.normal(0, 1e4), rng.uniform(-1, 1) * 1e-300, rng.uniform(0, kPi)};
    e.executed = {rng.uniform(), 1.0 / 3.0, -0.0};
    e.success = rng.bernoulli(0.5);
    e.robot_id = rng.index(robots);
    ds.records.push_back(e);
  }
  return ds;
}

void expect_same(const Dataset& a, const Dataset& b) {
  EXPECT_EQ(a.split, b.split);
  EXPECT_EQ(a.patch_size, b.patch_size);
  EXPECT_EQ(a.scene_seeds, b.scene_seeds);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.noise, b.noise);
  ASSERT_EQ(a.scenes.size(), b.scenes.size());
  for (std::size_t i = 0; i < a.scenes.size(); ++i) {
    EXPECT_EQ(a.scenes[i].width, b.scenes[i].width);
    EXPECT_EQ(a.scenes[i].channels, b.scenes[i].channels);
    EXPECT_EQ(a.scenes[i].data, b.scenes[i].data);
  }
}

// Replaces line `idx` (0-based) of records.jsonl.
void edit_record_line(const fs::path& dir, std::size_t idx, const std::function<std::string(std::string)>& f) {
  std::istringstream in(slurp(dir / "records.jsonl"));
  std::string line, out;
  for (std::size_t i = 0; std::getline(in, line); ++i) {
    if (i == idx) line = f(line);
    if (!line.empty() || i != idx) out += line + "\n";
  }
  spit(dir / "records.jsonl", out);
}

}  // namespace

TEST(Dataset, RoundTripThousandRecords) {
  const auto ds = generate_dataset(small_gen(3));
  ASSERT_EQ(ds.size(), 1000u);
  const auto dir = temp_dir("rt");
  write_dataset(ds, dir);
  EXPECT_NO_THROW(verify_dataset(dir));
  expect_same(ds, read_dataset(dir));
  EXPECT_FALSE(fs::exists(dir / ".lock"));
  const auto m = read_manifest(dir);
  EXPECT_EQ(m.record_count, 1000u);
  EXPECT_EQ(m.robot_ids, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(m.file_digests.size(), ds.scenes.size() + 1);
  fs::remove_all(dir);
}

TEST(Dataset, RandomDatasetsRoundTrip) {
  Rng rng(41);
  const auto dir = temp_dir("prop");
  for (int t = 0; t < 40; ++t) {
    const auto ds = random_dataset(rng);
    fs::remove_all(dir);
    write_dataset(ds, dir);
    expect_same(ds, read_dataset(dir));
  }
  fs::remove_all(dir);
}

TEST(Dataset, SameSeedByteIdentical) {
  const auto a = temp_dir("a"), b = temp_dir("b");
  write_dataset(generate_dataset(small_gen(7)), a);
  write_dataset(generate_dataset(small_gen(7)), b);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 27u);
  write_dataset(generate_dataset(small_gen(8)), b);
  EXPECT_NE(slurp(a / "records.jsonl"), slurp(b / "records.jsonl"));
  fs::remove_all(a);
  fs::remove_all(b);
}

class BrokenDataset : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    auto g = small_gen(5);
    g.n_scenes = 3;
    write_dataset(generate_dataset(g), dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

TEST_F(BrokenDataset, VersionMismatch) {
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  j["format_version"] = 2;
  spit(dir / "manifest.json", j.dump());
  EXPECT_THROW(read_dataset(dir), UnsupportedVersion);
}

TEST_F(BrokenDataset, TruncatedRecordNamesIndex) {
  edit_record_line(dir, 37, [](std::string s) { return s.substr(0, s.size() / 2); });
  try {
    read_dataset(dir);
    FAIL() << "no error";
  } catch (const CorruptRecord& e) {
    EXPECT_EQ(e.index, 37u);
    EXPECT_NE(std::string(e.what()).find("record 37"), std::string::npos);
  }
}

TEST_F(BrokenDataset, MissingFieldNamesIndex) {
  edit_record_line(dir, 5, [](std::string s) {
    auto j = nlohmann::json::parse(s);
    j.erase("theta");
    return j.dump();
  });
  try {
    read_dataset(dir);
    FAIL() << "no error";
  } catch (const CorruptRecord& e) {
    EXPECT_EQ(e.index, 5u);
  }
}

TEST_F(BrokenDataset, SceneOutOfRange) {
  edit_record_line(dir, 9, [](std::string s) {
    auto j = nlohmann::json::parse(s);
    j["scene"] = 3;
    return j.dump();
  });
  EXPECT_THROW(read_dataset(dir), CorruptRecord);
}

TEST_F(BrokenDataset, CountMismatch) {
  edit_record_line(dir, 119, [](std::string) { return std::string(); });
  try {
    read_dataset(dir);
    FAIL() << "no error";
  } catch (const CorruptRecord&) {
    FAIL() << "reported as a record error";
  } catch (const CorruptDataset& e) {
    EXPECT_NE(std::string(e.what()).find("120"), std::string::npos);
  }
}

TEST_F(BrokenDataset, FlippedSceneByte) {
  auto blob = slurp(dir / "scenes/scene_000001.bin");
  blob[100] = static_cast<char>(blob[100] ^ 1);
  spit(dir / "scenes/scene_000001.bin", blob);
  EXPECT_THROW(verify_dataset(dir), CorruptDataset);
  EXPECT_THROW(read_dataset(dir), CorruptDataset);
}

TEST_F(BrokenDataset, TruncatedScene) {
  const auto blob = slurp(dir / "scenes/scene_000002.bin");
  spit(dir / "scenes/scene_000002.bin", blob.substr(0, blob.size() - 3));
  EXPECT_THROW(read_dataset(dir), CorruptDataset);
  fs::remove(dir / "scenes/scene_000002.bin");
  EXPECT_THROW(read_dataset(dir), CorruptDataset);
}

TEST_F(BrokenDataset, ManifestErrors) {
  spit(dir / "manifest.json", "{ not json");
  EXPECT_THROW(read_manifest(dir), CorruptDataset);
  spit(dir / "manifest.json", "{}");
  EXPECT_THROW(read_manifest(dir), CorruptDataset);
  fs::remove(dir / "manifest.json");
  EXPECT_THROW(read_dataset(dir), IoError);
}

TEST_F(BrokenDataset, NoiseTampered) {
  auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  j["noise"][0]["offset"][0] = 99.0;
  spit(dir / "manifest.json", j.dump());
  EXPECT_THROW(read_dataset(dir), CorruptDataset);
}

TEST_F(BrokenDataset, WriterLock) {
  {
    DatasetLock held(dir);
    EXPECT_THROW(write_dataset(generate_dataset(small_gen(5)), dir), IoError);
  }
  EXPECT_NO_THROW(write_dataset(generate_dataset(small_gen(5)), dir));
}

// ---------------------------------------------------------------------------

TEST(Checkpoint, RoundTripExact) {
  RobustGraspModel<double> m(tiny::config(), NoiseMode::uniform);
  tiny::randomize(m, 3);
  const auto bytes = serialize_checkpoint(m, {{"fleet", {1, 2}}});
  CheckpointInfo info;
  auto back = deserialize_checkpoint<double>(bytes, &info);
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(back.noise_mode(), NoiseMode::uniform);
  EXPECT_EQ(info.header["extra"]["fleet"][1], 2);
  EXPECT_EQ(info.header["angle_bins"], 3);
  auto a = m.params(), b = back.params();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].value, *b[i].value);
  EXPECT_EQ(serialize_checkpoint(back, {{"fleet", {1, 2}}}), bytes);
}

TEST(Checkpoint, FloatToDouble) {
  RobustGraspModel<float> m(tiny::config());
  tiny::randomize(m, 4);
  auto back = deserialize_checkpoint<double>(serialize_checkpoint(m));
  auto a = m.params();
  auto b = back.params();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (Eigen::Index k = 0; k < a[i].value->size(); ++k)
      EXPECT_EQ(static_cast<double>(a[i].value->data()[k]), b[i].value->data()[k]);
}

TEST(Checkpoint, Errors) {
  RobustGraspModel<float> m(tiny::config());
  const auto good = serialize_checkpoint(m);
  EXPECT_THROW(deserialize_checkpoint<float>("RGCKPX" + good.substr(6)), LoadError);
  auto v2 = good;
  v2[8] = 2;
  EXPECT_THROW(deserialize_checkpoint<float>(v2), UnsupportedVersion);
  EXPECT_THROW(deserialize_checkpoint<float>(good.substr(0, good.size() - 1)), LoadError);
  EXPECT_THROW(deserialize_checkpoint<float>(good + "x"), LoadError);
  EXPECT_THROW(deserialize_checkpoint<float>(good.substr(0, 10)), LoadError);
  EXPECT_THROW(load_checkpoint<float>("/nonexistent/path.ckpt"), IoError);
  // header edited to a different geometry
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= std::uint64_t(static_cast<unsigned char>(good[12 + i])) << (8 * i);
  auto header = nlohmann::json::parse(good.substr(20, len));
  header["blocks"][0]["rows"] = 99;
  const auto text = header.dump();
  std::string bad = good.substr(0, 12);
  for (int i = 0; i < 8; ++i) bad.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
  bad += text + good.substr(20 + len);
  EXPECT_THROW(deserialize_checkpoint<float>(bad), LoadError);
}
