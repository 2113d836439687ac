#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "robust_grasp/model.hpp"
#include "tiny_model.hpp"

using namespace robust_grasp;

namespace {

GPNOutput random_gpn(Rng& rng, int bins) {
  GPNOutput g;
  for (int j = 0; j < kNumHypotheses; ++j) {
    std::vector<double> row;
    for (int k = 0; k < bins; ++k) row.push_back(rng.uniform());
    g.probs.push_back(row);
  }
  return g;
}

NMNOutput random_nmn(Rng& rng) {
  NMNOutput n;
  double s = 0;
  for (int j = 0; j < kNumHypotheses; ++j) {
    n.dist.push_back(-std::log(1 - rng.uniform()));
    s += n.dist.back();
  }
  for (auto& v : n.dist) v /= s;
  return n;
}

}  // namespace

TEST(Marginalize, DeltaSelectsRow) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto g = random_gpn(rng, 18);
    const int j = rng.index(kNumHypotheses);
    NMNOutput d{std::vector<double>(kNumHypotheses, 0.0)};
    d.dist[static_cast<std::size_t>(j)] = 1;
    EXPECT_EQ(marginalize(g, d), g.probs[static_cast<std::size_t>(j)]);
  }
}

TEST(Marginalize, UniformOverEqualRows) {
  GPNOutput g;
  const std::vector<double> p{0.1, 0.7, 0.3};
  for (int j = 0; j < kNumHypotheses; ++j) g.probs.push_back(p);
  const auto out = marginalize(g, NMNOutput{std::vector<double>(kNumHypotheses, 1.0 / 9)});
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(out[k], p[k], 1e-15);
}

TEST(Marginalize, ConvexPair) {
  GPNOutput g;
  for (int j = 0; j < kNumHypotheses; ++j) g.probs.push_back({0.9});
  g.probs[0] = {0.2};
  g.probs[1] = {0.6};
  NMNOutput n{std::vector<double>(kNumHypotheses, 0.0)};
  n.dist[0] = n.dist[1] = 0.5;
  EXPECT_NEAR(marginalize(g, n)[0], 0.4, 1e-15);
}

TEST(Marginalize, LinearInNoiseDistribution) {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const auto g = random_gpn(rng, 6);
    const auto a = random_nmn(rng), b = random_nmn(rng);
    const double alpha = rng.uniform();
    NMNOutput mix;
    for (int j = 0; j < kNumHypotheses; ++j) mix.dist.push_back(alpha * a.dist[j] + (1 - alpha) * b.dist[j]);
    const auto lhs = marginalize(g, mix), ma = marginalize(g, a), mb = marginalize(g, b);
    for (int k = 0; k < 6; ++k) {
      EXPECT_NEAR(lhs[k], alpha * ma[k] + (1 - alpha) * mb[k], 1e-12);
      double lo = 1, hi = 0;
      for (int j = 0; j < kNumHypotheses; ++j) {
        lo = std::min(lo, g.probs[j][k]);
        hi = std::max(hi, g.probs[j][k]);
      }
      EXPECT_GE(lhs[k], lo - 1e-12);
      EXPECT_LE(lhs[k], hi + 1e-12);
    }
  }
}

TEST(Marginalize, ShapeErrors) {
  Rng rng(3);
  auto g = random_gpn(rng, 4);
  EXPECT_THROW(marginalize(g, NMNOutput{std::vector<double>(8, 0.125)}), ShapeError);
  g.probs.pop_back();
  EXPECT_THROW(marginalize(g, random_nmn(rng)), ShapeError);
  g = random_gpn(rng, 4);
  g.probs[3].push_back(0.5);
  EXPECT_THROW(marginalize(g, random_nmn(rng)), ShapeError);
}

TEST(Loss, KnownValues) {
  const std::vector<double> m{0.5, 1 - 1e-7, 0.0, 1.0};
  EXPECT_NEAR(grasp_loss(m, 0, true), std::log(2.0), 1e-12);
  EXPECT_NEAR(grasp_loss(m, 1, true), 1e-7, 1e-12);
  EXPECT_NEAR(grasp_loss(m, 2, true), -std::log(1e-7), 1e-9);
  EXPECT_NEAR(grasp_loss(m, 3, false), -std::log(1e-7), 1e-6);
  EXPECT_THROW(grasp_loss(m, 4, true), InvalidInput);
  EXPECT_THROW(grasp_loss(m, -1, false), InvalidInput);
}

TEST(Loss, MatchesIndependentBce) {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> m(5);
    for (auto& v : m) v = rng.uniform();
    const int k = rng.index(5);
    const bool g = rng.bernoulli(0.5);
    EXPECT_NEAR(grasp_loss(m, k, g), static_cast<double>(oracle::bce(m[k], g)), 1e-10);
  }
}

TEST(NMN, ArgmaxTieBreakAndEntropy) {
  NMNOutput u{std::vector<double>(kNumHypotheses, 1.0 / 9)};
  EXPECT_EQ(u.argmax(), 0);
  EXPECT_NEAR(u.entropy(), std::log(9.0), 1e-12);
  NMNOutput d{std::vector<double>(kNumHypotheses, 0.0)};
  d.dist[4] = 1;
  EXPECT_EQ(d.argmax(), 4);
  EXPECT_EQ(d.entropy(), 0.0);
}

TEST(Model, FreshNmnIsUniform) {
  RobustGraspModel<double> m(tiny::config());
  Rng rng(5);
  const auto scene = tiny::random_scene(16, rng);
  const auto d = m.nmn_forward({1, {3, 4}, 0}, scene);
  double s = 0;
  for (double v : d.dist) {
    EXPECT_NEAR(v, 1.0 / 9, 1e-12);
    s += v;
  }
  EXPECT_NEAR(s, 1, 1e-12);
  EXPECT_THROW(m.nmn_forward({2, {3, 4}, 0}, scene), InvalidInput);
}

TEST(Model, NmnSumsToOne) {
  RobustGraspModel<float> m(tiny::config());
  tiny::randomize(m, 6, 1.0);
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto scene = tiny::random_scene(16, rng);
    const auto d = m.nmn_forward({t % 2, {rng.index(16), rng.index(16)}, 0}, scene);
    double s = 0;
    for (double v : d.dist) {
      EXPECT_GE(v, 0);
      s += v;
    }
    EXPECT_NEAR(s, 1, 1e-5);
  }
}

TEST(Model, GpnSharedWeights) {
  RobustGraspModel<double> m(tiny::config());
  tiny::randomize(m, 7);
  Rng rng(7);
  const auto scene = tiny::random_scene(16, rng);
  const auto set = candidate_patches(scene, {8, 8}, 8, 2);
  std::array<Raster, 9> same;
  same.fill(set.patches[2]);
  const auto g = m.gpn_forward(std::span<const Raster>(same));
  for (int j = 1; j < 9; ++j)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(g.probs[j][k], g.probs[0][k], 1e-14);

  const auto base = m.gpn_forward(set);
  std::array<Raster, 9> perm;
  const std::array<int, 9> order{4, 2, 0, 8, 1, 7, 3, 5, 6};
  for (int j = 0; j < 9; ++j) perm[j] = set.patches[order[j]];
  const auto permuted = m.gpn_forward(std::span<const Raster>(perm));
  for (int j = 0; j < 9; ++j)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(permuted.probs[j][k], base.probs[order[j]][k], 1e-14);
}

TEST(Model, ZeroOutputLayerGivesHalf) {
  RobustGraspModel<double> m(tiny::config());
  tiny::randomize(m, 8);
  m.gpn_output_layer().weight().setZero();
  m.gpn_output_layer().bias().setZero();
  Rng rng(8);
  const auto set = candidate_patches(tiny::random_scene(16, rng), {5, 9}, 8, 2);
  for (const auto& row : m.gpn_forward(set).probs)
    for (double p : row) EXPECT_EQ(p, 0.5);
  Raster wrong(6, 6, 3);
  EXPECT_THROW(m.gpn_forward(std::span<const Raster>(&wrong, 1)), ShapeError);
}

// The batched training path agrees with gpn_forward + nmn_forward + marginalize.
TEST(Model, BatchedMarginalMatchesOperations) {
  RobustGraspModel<double> m(tiny::config());
  tiny::randomize(m, 9);
  auto in = tiny::random_inputs<double>(m.config(), 20, 9);
  const auto batched = m.marginal(in.samples);
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    const auto& s = in.samples[i];
    const auto g = m.gpn_forward(candidate_patches(*s.scene, s.location, 8, 2));
    const auto n = m.nmn_forward({s.robot_id, s.location, 0}, *s.scene);
    const auto out = marginalize(g, n);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(batched(k, static_cast<Eigen::Index>(i)), out[k], 1e-12);
    const auto r = m.loss_and_grad(std::span<const Sample<double>>(&s, 1), false);
    EXPECT_NEAR(r.loss, grasp_loss(out, s.bin, s.label), 1e-12);
  }
}

// NMN pinned to index 0 reduces to patch grasping on the recorded patch.
TEST(Model, DeltaNmnReducesToPatchGrasp) {
  RobustGraspModel<double> full(tiny::config());
  tiny::randomize(full, 10);
  full.nmn_output_layer().weight().setZero();
  full.nmn_output_layer().bias().setConstant(-1000);
  full.nmn_output_layer().bias()(0) = 1000;
  auto plain = full;
  plain.set_noise_mode(NoiseMode::center_only);
  auto in = tiny::random_inputs<double>(full.config(), 32, 10);

  nn::zero_grad(full.params());
  nn::zero_grad(plain.params());
  const auto a = full.loss_and_grad(in.samples);
  const auto b = plain.loss_and_grad(in.samples);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);

  double ref = 0;
  for (const auto& s : in.samples) {
    const auto p = full.gpn_forward(std::span<const Raster>(std::vector<Raster>{extract_patch(*s.scene, s.location, 8)}));
    ref += static_cast<double>(oracle::bce(p.probs[0][static_cast<std::size_t>(s.bin)], s.label));
  }
  EXPECT_NEAR(a.loss, ref / in.samples.size(), 1e-12);

  const auto ga = full.gpn_params(), gb = plain.gpn_params();
  for (std::size_t i = 0; i < ga.size(); ++i)
    EXPECT_LE((*ga[i].grad - *gb[i].grad).cwiseAbs().maxCoeff(), 1e-12) << ga[i].name;
}

TEST(Model, UniformModeAveragesPatches) {
  RobustGraspModel<double> m(tiny::config(), NoiseMode::uniform);
  tiny::randomize(m, 11);
  auto in = tiny::random_inputs<double>(m.config(), 10, 11);
  const auto batched = m.marginal(in.samples);
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    const auto& s = in.samples[i];
    const auto g = m.gpn_forward(candidate_patches(*s.scene, s.location, 8, 2));
    for (int k = 0; k < 3; ++k) {
      double mean = 0;
      for (int j = 0; j < 9; ++j) mean += g.probs[j][k] / 9;
      EXPECT_NEAR(batched(k, static_cast<Eigen::Index>(i)), mean, 1e-12);
    }
  }
}

TEST(Predict, PicksDominantCandidate) {
  RobustGraspModel<double> m(tiny::config(), NoiseMode::center_only);
  tiny::randomize(m, 12);
  Rng rng(12);
  const auto scene = tiny::random_scene(16, rng);
  std::vector<Pixel> cands{{3, 3}, {10, 12}, {7, 1}};
  const auto best = predict_best_grasp(m, scene, std::span<const Pixel>(cands), 0);
  double top = -1;
  int arg_c = 0, arg_k = 0;
  for (int c = 0; c < 3; ++c) {
    const auto g = m.gpn_forward(std::span<const Raster>(std::vector<Raster>{extract_patch(scene, cands[c], 8)}));
    for (int k = 0; k < 3; ++k)
      if (g.probs[0][k] > top) {
        top = g.probs[0][k];
        arg_c = c;
        arg_k = k;
      }
  }
  EXPECT_EQ(best.center_index, arg_c);
  EXPECT_EQ(best.bin, arg_k);
  EXPECT_EQ(best.grasp.x, cands[arg_c].x);
  EXPECT_NEAR(best.grasp.theta, AngleBinning(3).bin_center(arg_k), 1e-15);

  std::vector<Pixel> twins{{5, 5}, {5, 5}};
  EXPECT_EQ(predict_best_grasp(m, scene, std::span<const Pixel>(twins), 0).center_index, 0);
  EXPECT_THROW(predict_best_grasp(m, scene, std::span<const Pixel>(), 0), InvalidInput);
}

TEST(Field, UntrainedIsZero) {
  RobustGraspModel<float> m(tiny::config());
  Rng rng(13);
  const auto scene = tiny::random_scene(16, rng);
  const auto grid = probe_grid(16, 4);
  ASSERT_EQ(grid.size(), 16u);
  for (const auto& v : noise_correction_field(m, scene, 1, std::span<const Pixel>(grid))) {
    EXPECT_EQ(v.hypothesis, 0);
    EXPECT_EQ(v.displacement, (Pixel{0, 0}));
  }
}

TEST(ModelConfig, Validation) {
  auto c = tiny::config();
  c.patch_size = 7;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = tiny::config();
  c.gpn_channels = {2, 2, 2, 2};
  EXPECT_THROW(c.validate(), InvalidInput);
  c = tiny::config();
  c.nmn_scene_side = 5;
  EXPECT_THROW(c.validate(), InvalidInput);
}
