#include <gtest/gtest.h>

#include <filesystem>

#include "robust_grasp/training.hpp"

using namespace robust_grasp;

namespace {

GenerateConfig gen(double max_noise, int n_scenes, std::uint64_t base, const std::string& split) {
  GenerateConfig g;
  g.world.max_noise = max_noise;
  g.world.seed = 11;
  g.n_scenes = n_scenes;
  g.grasps_per_scene = 40;
  g.scene_seed_base = base;
  g.split = split;
  return g;
}

ModelConfig small_model() {
  ModelConfig c;
  c.gpn_channels = {8, 16};
  c.nmn_channels = {4, 8};
  c.feature_dim = 32;
  c.nmn_hidden = 32;
  return c;
}

TrainConfig train_cfg(int e1, int e2) {
  TrainConfig t;
  t.stage1_epochs = e1;
  t.stage2_epochs = e2;
  t.adam.learning_rate = 1e-3;
  t.model = small_model();
  return t;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rg_training_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// One stage-1 model on noise-free data shared by several tests.
class CleanStage1 : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    train_ = new Dataset(generate_dataset(gen(0, 150, 0, "train")));
    held_ = new Dataset(generate_dataset(gen(0, 30, 100000, "heldout")));
    model_ = new RobustGraspModel<float>(small_model());
    PreparedDataset<float> tr(*train_, model_->config()), he(*held_, model_->config());
    Trainer<float> t(*model_, train_cfg(12, 1));
    log_ = new std::vector<EpochMetrics>(t.train_stage1(tr, &he));
  }
  static void TearDownTestSuite() {
    delete train_;
    delete held_;
    delete model_;
    delete log_;
  }
  static Dataset* train_;
  static Dataset* held_;
  static RobustGraspModel<float>* model_;
  static std::vector<EpochMetrics>* log_;
};
Dataset* CleanStage1::train_ = nullptr;
Dataset* CleanStage1::held_ = nullptr;
RobustGraspModel<float>* CleanStage1::model_ = nullptr;
std::vector<EpochMetrics>* CleanStage1::log_ = nullptr;

}  // namespace

TEST_F(CleanStage1, HeldoutAccuracyAtLeast85) {
  PreparedDataset<float> he(*held_, model_->config());
  const auto m = evaluate_binary(*model_, he);
  EXPECT_GE(m.accuracy, 0.85);
  EXPECT_EQ(m.count, held_->size());
  for (int r = 0; r < 4; ++r) EXPECT_GT(m.robot_accuracy(r), 0.7);
}

TEST_F(CleanStage1, LossMovingAverageNonIncreasing) {
  std::vector<double> loss;
  for (const auto& e : *log_)
    if (e.split == "train") loss.push_back(e.loss);
  ASSERT_EQ(loss.size(), 12u);
  double prev = 1e9;
  for (std::size_t i = 4; i < loss.size(); ++i) {
    const double avg = (loss[i] + loss[i - 1] + loss[i - 2] + loss[i - 3] + loss[i - 4]) / 5;
    EXPECT_LE(avg, prev);
    prev = avg;
  }
}

TEST_F(CleanStage1, NmnUntouchedByStage1) {
  RobustGraspModel<float> fresh(small_model());
  const auto a = fresh.nmn_params(), b = model_->nmn_params();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].value, *b[i].value);
}

TEST_F(CleanStage1, ZeroNoiseExecutionNotWorse) {
  WorldConfig wc = gen(12, 0, 0, "train").world;
  wc.textures = {12, 13, 14, 15};
  const auto fleet = make_fleet(wc);
  std::vector<WorldState> worlds;
  for (int i = 0; i < 10; ++i) worlds.push_back(make_world(wc, derive_seed(77, i), fleet));
  SimEvalConfig sc;
  sc.robots = {0, 1, 2, 3};
  const auto noisy = evaluate_sim_grasping(*model_, worlds, sc);
  sc.zero_noise = true;
  const auto clean = evaluate_sim_grasping(*model_, worlds, sc);
  EXPECT_EQ(clean.trials, 40);
  EXPECT_GE(clean.success_rate, noisy.success_rate);
  EXPECT_GT(clean.success_rate, clean.random_floor);
}

TEST_F(CleanStage1, CheckpointRoundTripBitExact) {
  const auto dir = temp_dir("ckpt");
  std::filesystem::create_directories(dir);
  save_checkpoint(*model_, (dir / "m.ckpt").string(), {{"note", "x"}});
  CheckpointInfo info;
  auto loaded = load_checkpoint<float>((dir / "m.ckpt").string(), &info);
  EXPECT_EQ(info.header.at("extra").at("note"), "x");
  PreparedDataset<float> he(*held_, model_->config());
  const auto a = evaluate_binary(*model_, he), b = evaluate_binary(loaded, he);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.per_robot, b.per_robot);
  std::filesystem::remove_all(dir);
}

TEST(Training, DeterministicRunsAgree) {
  const auto tr = generate_dataset(gen(12, 12, 0, "train"));
  const auto he = generate_dataset(gen(12, 4, 100000, "heldout"));
  std::vector<std::vector<EpochMetrics>> runs;
  for (int k = 0; k < 2; ++k) {
    RobustGraspModel<float> m(small_model());
    PreparedDataset<float> a(tr, m.config()), b(he, m.config());
    Trainer<float> t(m, train_cfg(1, 2));
    runs.push_back(t.train_both(a, &b));
  }
  ASSERT_EQ(runs[0].size(), runs[1].size());
  ASSERT_EQ(runs[0].size(), 6u);
  for (std::size_t i = 0; i < runs[0].size(); ++i) {
    EXPECT_NEAR(runs[0][i].loss, runs[1][i].loss, 1e-6);
    EXPECT_NEAR(runs[0][i].accuracy, runs[1][i].accuracy, 1e-6);
    EXPECT_NEAR(runs[0][i].nmn_entropy, runs[1][i].nmn_entropy, 1e-6);
  }
}

TEST(Training, SinkAndPerEpochCheckpoints) {
  const auto tr = generate_dataset(gen(12, 6, 0, "train"));
  const auto he = generate_dataset(gen(12, 2, 100000, "heldout"));
  RobustGraspModel<float> m(small_model());
  PreparedDataset<float> a(tr, m.config()), b(he, m.config());
  Trainer<float> t(m, train_cfg(1, 2));
  std::vector<nlohmann::json> lines;
  t.set_sink([&](const EpochMetrics& e) { lines.push_back(e.to_json()); });
  const auto dir = temp_dir("epochs");
  t.set_checkpoint_dir(dir.string());
  t.train_both(a, &b);
  ASSERT_EQ(lines.size(), 6u);
  for (const auto& l : lines)
    for (const char* k : {"epoch", "split", "loss", "accuracy", "nmn_entropy"}) EXPECT_TRUE(l.contains(k));
  EXPECT_EQ(lines[1]["split"], "heldout");
  for (const char* f : {"stage1_epoch1.ckpt", "stage2_epoch1.ckpt", "stage2_epoch2.ckpt"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  std::filesystem::remove_all(dir);
}

TEST(Training, ColdStartSkipsStage1) {
  const auto tr = generate_dataset(gen(12, 4, 0, "train"));
  RobustGraspModel<float> m(small_model());
  PreparedDataset<float> a(tr, m.config());
  auto cfg = train_cfg(3, 1);
  cfg.cold_start = true;
  Trainer<float> t(m, cfg);
  const auto log = t.train_both(a);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].stage, 2);
}

// With the NMN pinned to the recorded patch, joint training is Patch-Grasp.
TEST(Training, PinnedNmnMatchesPatchGrasp) {
  const auto tr = generate_dataset(gen(12, 10, 0, "train"));
  const auto he = generate_dataset(gen(12, 4, 100000, "heldout"));
  RobustGraspModel<float> pinned(small_model());
  pinned.nmn_output_layer().weight().setZero();
  pinned.nmn_output_layer().bias().setConstant(-1000);
  pinned.nmn_output_layer().bias()(0) = 1000;
  RobustGraspModel<float> patch = pinned;
  auto cfg = train_cfg(0, 2);
  PreparedDataset<float> a(tr, pinned.config()), b(he, pinned.config());
  Trainer<float> tp(pinned, cfg);
  const auto lp = tp.train_stage2(a, &b);
  cfg.stage2_mode = NoiseMode::center_only;
  Trainer<float> tc(patch, cfg);
  const auto lc = tc.train_stage2(a, &b);
  ASSERT_EQ(lp.size(), lc.size());
  for (std::size_t i = 0; i < lp.size(); ++i) {
    EXPECT_NEAR(lp[i].loss, lc[i].loss, 1e-4);
    EXPECT_NEAR(lp[i].accuracy, lc[i].accuracy, 0.01);
  }
}

// Frozen-uniform stage 2 predicts the plain average of the nine patch outputs.
TEST(Training, UniformStage2IsPatchAverage) {
  const auto tr = generate_dataset(gen(12, 10, 0, "train"));
  const auto he = generate_dataset(gen(12, 4, 100000, "heldout"));
  RobustGraspModel<float> m(small_model());
  const RobustGraspModel<float> before = m;
  auto cfg = train_cfg(1, 1);
  cfg.stage2_mode = NoiseMode::uniform;
  PreparedDataset<float> a(tr, m.config()), b(he, m.config());
  Trainer<float> t(m, cfg);
  const auto log = t.train_both(a, &b);
  auto nb = const_cast<RobustGraspModel<float>&>(before).nmn_params();
  auto na = m.nmn_params();
  for (std::size_t i = 0; i < na.size(); ++i) EXPECT_EQ(*na[i].value, *nb[i].value);

  std::size_t correct = 0;
  for (const auto& s : b.samples()) {
    const auto g = m.gpn_forward(candidate_patches(*s.scene, s.location, m.config().patch_size, m.config().offset_d));
    double p = 0;
    for (const auto& row : g.probs) p += row[static_cast<std::size_t>(s.bin)] / 9;
    correct += (p >= 0.5) == s.label;
  }
  EXPECT_NEAR(log.back().accuracy, double(correct) / b.size(), 1.5 / b.size());
  EXPECT_NEAR(log.back().nmn_entropy, std::log(9.0), 1e-4);
}

TEST(Training, LeakIsHardError) {
  const auto tr = generate_dataset(gen(12, 4, 0, "train"));
  auto he = generate_dataset(gen(12, 4, 100000, "heldout"));
  EXPECT_NO_THROW(check_disjoint(tr, he));
  he.scenes[2] = tr.scenes[1];
  EXPECT_THROW(check_disjoint(tr, he), LeakError);
  RobustGraspModel<float> m(small_model());
  PreparedDataset<float> a(tr, m.config()), b(he, m.config());
  Trainer<float> t(m, train_cfg(1, 1));
  EXPECT_THROW(t.train_stage1(a, &b), LeakError);
  auto mislabeled = tr;
  mislabeled.split = "heldout";
  EXPECT_THROW(check_disjoint(mislabeled, generate_dataset(gen(12, 2, 200000, "heldout"))), LeakError);
}

TEST(Training, ConfigValidation) {
  auto c = train_cfg(1, 0);
  EXPECT_THROW(c.validate(), InvalidInput);
  c = train_cfg(-1, 1);
  EXPECT_THROW(c.validate(), InvalidInput);
  c = train_cfg(0, 1);
  EXPECT_NO_THROW(c.validate());
  c.adam.learning_rate = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
  const auto kv = KeyValueConfig::parse("stage1_epochs = 2\nstage2_epochs = 10\nlearning_rate = 0.0001\n");
  const auto t = TrainConfig::from(kv);
  EXPECT_EQ(t.stage1_epochs, 2);
  EXPECT_EQ(t.stage2_epochs, 10);
  EXPECT_DOUBLE_EQ(t.adam.learning_rate, 1e-4);
}

TEST(Training, EmptyInputs) {
  Dataset empty;
  RobustGraspModel<float> m(small_model());
  PreparedDataset<float> a(empty, m.config());
  Trainer<float> t(m, train_cfg(1, 1));
  EXPECT_THROW(t.train_stage1(a), InvalidInput);
  SimEvalConfig sc;
  sc.robots = {0};
  EXPECT_THROW(evaluate_sim_grasping(m, std::span<const WorldState>(), sc), InvalidInput);
}

TEST(Training, PatchSizeMismatch) {
  auto g = gen(12, 1, 0, "train");
  g.patch_size = 16;
  const auto ds = generate_dataset(g);
  EXPECT_THROW(PreparedDataset<float>(ds, small_model()), InvalidInput);
}
