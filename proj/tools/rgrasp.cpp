// rgrasp: generate / collect / train / eval / report / viz-noise

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "robust_grasp.hpp"

namespace fs = std::filesystem;
using namespace robust_grasp;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string config;
  bool deterministic = false;
};

KeyValueConfig load_config(const std::string& path) {
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

// Command-line seed wins over the config file.
KeyValueConfig with_seed(KeyValueConfig kv, const Globals& g) {
  if (g.seed_set) kv.set("seed", std::to_string(g.seed));
  if (g.deterministic) kv.set("deterministic", "true");
  return kv;
}

std::vector<WorldState> make_eval_worlds(const KeyValueConfig& kv, const std::map<int, NoiseTransform>& fleet, int n) {
  WorldConfig wc = WorldConfig::from(kv);
  wc.textures = kv.get_list("eval_textures", {12, 13, 14, 15});
  const auto base = static_cast<std::uint64_t>(kv.get("eval_world_seed_base", 5000000));
  std::vector<WorldState> worlds;
  for (int i = 0; i < n; ++i) worlds.push_back(make_world(wc, derive_seed(wc.seed, base + std::uint64_t(i)), fleet));
  return worlds;
}

std::map<int, NoiseTransform> fleet_from_header(const nlohmann::json& header) {
  std::map<int, NoiseTransform> fleet;
  if (header.contains("extra") && header["extra"].contains("fleet"))
    for (const auto& t : header["extra"]["fleet"]) {
      auto nt = noise_from_json(t);
      fleet.emplace(nt.robot_id, nt);
    }
  return fleet;
}

int cmd_generate(const Globals& g, const std::string& out, const std::string& split, int n_scenes) {
  auto kv = with_seed(load_config(g.config), g);
  if (!split.empty()) kv.set("split", split);
  if (n_scenes >= 0) kv.set("n_scenes", std::to_string(n_scenes));
  const auto gc = GenerateConfig::from(kv);
  const auto ds = generate_dataset(gc);
  write_dataset(ds, out);
  std::cout << nlohmann::json{{"records", ds.size()},
                              {"scenes", ds.scenes.size()},
                              {"split", ds.split},
                              {"flipped_label_fraction", flipped_label_fraction(ds, gc)}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_collect(const Globals& g, const std::string& out, int episodes, const std::string& policy_spec) {
  auto kv = with_seed(load_config(g.config), g);
  const WorldConfig wc = WorldConfig::from(kv);
  const auto cc = CollectionConfig::from(kv, wc);
  const auto fleet = make_fleet(wc);

  std::unique_ptr<GraspPolicy> policy;
  std::optional<RobustGraspModel<float>> model;
  if (policy_spec == "random") {
    policy = std::make_unique<RandomPolicy>();
  } else if (policy_spec.rfind("model:", 0) == 0) {
    model.emplace(load_checkpoint<float>(policy_spec.substr(6)));
    policy = std::make_unique<ModelPolicy<float>>(*model, kv.get("explore", 0.2));
  } else {
    throw InvalidInput("collect: --policy must be 'random' or 'model:<checkpoint>'");
  }

  Dataset all;
  all.split = kv.get("split", std::string("train"));
  all.patch_size = cc.patch_size;
  all.noise = fleet;
  std::string traces;
  for (int ep = 0; ep < episodes; ++ep) {
    const auto world = make_world(wc, derive_seed(wc.seed, 7000000 + std::uint64_t(ep)), fleet);
    const int robot = ep % wc.n_robots;
    auto res = run_episode(world, *policy, cc, robot, derive_seed(wc.seed, 9000000 + std::uint64_t(ep)));
    append_dataset(all, res.data);
    traces += nlohmann::json{{"episode", ep},
                             {"robot", robot},
                             {"exit", to_string(res.trace.exit)},
                             {"steps", res.trace.steps.size()},
                             {"records", res.data.size()},
                             {"random_decisions", res.trace.random_decisions},
                             {"grasp_near_decisions", res.trace.random_grasp_decisions},
                             {"base_moves", res.trace.base_moves},
                             {"infeasible_skipped", res.trace.infeasible_skipped}}
                  .dump() +
              "\n";
  }
  write_dataset(all, out);
  std::ofstream(fs::path(out) / "traces.jsonl") << traces;
  std::cout << nlohmann::json{{"episodes", episodes}, {"records", all.size()}, {"scenes", all.scenes.size()}}.dump()
            << "\n";
  return 0;
}

int cmd_train(const Globals& g, const std::string& out, const std::string& stage, std::string train_dir,
              std::string heldout_dir, const std::string& init) {
  auto kv = with_seed(load_config(g.config), g);
  if (train_dir.empty()) train_dir = kv.get("train_data", std::string());
  if (heldout_dir.empty()) heldout_dir = kv.get("heldout_data", std::string());
  if (train_dir.empty()) throw InvalidInput("train: no training dataset (--train or train_data)");
  auto tc = TrainConfig::from(kv);
  if (g.deterministic) tc.deterministic = true;

  const Dataset train = read_dataset(train_dir);
  std::optional<Dataset> heldout;
  if (!heldout_dir.empty()) heldout.emplace(read_dataset(heldout_dir));
  tc.model.patch_size = train.patch_size;
  tc.model.robot_count = std::max(tc.model.robot_count, train.robot_ids().empty() ? 1 : train.robot_ids().back() + 1);

  RobustGraspModel<float> model = [&] {
    if (!init.empty()) return load_checkpoint<float>(init);
    if (stage == "2" && !tc.cold_start) throw InvalidInput("train: --stage 2 needs --init <stage-1 checkpoint> or cold_start");
    return RobustGraspModel<float>(tc.model);
  }();
  if (heldout) check_disjoint(train, *heldout);
  PreparedDataset<float> ptr(train, model.config());
  std::optional<PreparedDataset<float>> pho;
  if (heldout) pho.emplace(*heldout, model.config());

  fs::create_directories(out);
  std::ofstream metrics(fs::path(out) / "metrics.jsonl");
  Trainer<float> trainer(model, tc);
  trainer.set_checkpoint_dir(out);
  trainer.set_sink([&](const EpochMetrics& m) {
    metrics << m.to_json().dump() << "\n";
    metrics.flush();
    std::cout << m.to_json().dump() << "\n";
  });
  const PreparedDataset<float>* ho = pho ? &*pho : nullptr;
  if (stage == "1")
    trainer.train_stage1(ptr, ho);
  else if (stage == "2")
    trainer.train_stage2(ptr, ho);
  else if (stage == "both")
    trainer.train_both(ptr, ho);
  else
    throw InvalidInput("train: --stage must be 1, 2 or both");
  save_checkpoint(model, (fs::path(out) / "model.ckpt").string(), {{"fleet", fleet_json(train.noise)}});
  verify_dataset(train_dir);
  if (heldout) verify_dataset(heldout_dir);
  return 0;
}

int cmd_eval(const Globals& g, const std::string& ckpt, const std::string& data, int sim_worlds,
             const std::string& model_name, const std::string& train_set, std::string test_set,
             const std::string& metrics_out) {
  auto kv = with_seed(load_config(g.config), g);
  CheckpointInfo info;
  const auto model = load_checkpoint<float>(ckpt, &info);
  std::vector<EvalEntry> entries;
  if (!data.empty()) {
    const Dataset ds = read_dataset(data);
    PreparedDataset<float> pd(ds, model.config());
    const auto m = evaluate_binary(model, pd);
    nlohmann::json per_robot;
    for (const auto& [r, c] : m.per_robot) per_robot[std::to_string(r)] = m.robot_accuracy(r);
    std::cout << nlohmann::json{{"accuracy", m.accuracy}, {"loss", m.loss}, {"count", m.count}, {"per_robot", per_robot}}
                     .dump()
              << "\n";
    entries.push_back({"binary", model_name, train_set, test_set.empty() ? ds.split : test_set, m.accuracy, g.seed});
    verify_dataset(data);
  }
  if (sim_worlds > 0) {
    auto fleet = fleet_from_header(info.header);
    if (fleet.empty()) fleet = make_fleet(WorldConfig::from(kv));
    const auto worlds = make_eval_worlds(kv, fleet, sim_worlds);
    SimEvalConfig sc;
    for (const auto& [r, t] : fleet) sc.robots.push_back(r);
    const auto res = evaluate_sim_grasping(model, std::span<const WorldState>(worlds), sc);
    std::cout << nlohmann::json{{"sim_success", res.success_rate}, {"random_floor", res.random_floor}, {"trials", res.trials}}
                     .dump()
              << "\n";
    entries.push_back({"sim", model_name, train_set, test_set.empty() ? "sim" : test_set, res.success_rate, g.seed});
  }
  if (!metrics_out.empty()) {
    std::ofstream f(metrics_out, std::ios::app);
    if (!f) throw IoError("eval: cannot open " + metrics_out);
    for (const auto& e : entries) f << e.to_json().dump() << "\n";
  }
  return 0;
}

int cmd_report(const std::string& metrics_dir, const std::string& out) {
  const auto text = report_tables(fs::path(metrics_dir));
  if (out.empty())
    std::cout << text;
  else
    std::ofstream(out) << text;
  return 0;
}

int cmd_viz(const Globals& g, const std::string& ckpt, int robot, int grid, const std::string& out) {
  auto kv = with_seed(load_config(g.config), g);
  CheckpointInfo info;
  const auto model = load_checkpoint<float>(ckpt, &info);
  auto fleet = fleet_from_header(info.header);
  if (fleet.empty()) fleet = make_fleet(WorldConfig::from(kv));
  auto it = fleet.find(robot);
  if (it == fleet.end() || robot >= model.config().robot_count)
    throw InvalidInput("viz-noise: robot id " + std::to_string(robot) + " not in checkpoint");
  const auto world = make_eval_worlds(kv, fleet, 1).front();
  const Raster scene = render_scene(world);
  std::ofstream f;
  std::ostream* os = &std::cout;
  if (!out.empty()) {
    f.open(out);
    if (!f) throw IoError("viz-noise: cannot open " + out);
    os = &f;
  }
  emit_noise_field_plot(model, scene, robot, grid, it->second, *os);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-robust grasp learning on a simulated robot fleet"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "flat key = value config file");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed");
  app.add_flag("--deterministic", g.deterministic, "single-threaded ordered execution");

  std::string out, split, train_dir, heldout_dir, init, stage = "both", policy = "random", ckpt, data;
  std::string model_name = "robust-grasp", train_set = "train", test_set, metrics_out, metrics_dir;
  int n_scenes = -1, episodes = 100, sim_worlds = 0, robot = 0, grid = 16;

  auto* gen = app.add_subcommand("generate", "render scenes and label grasps");
  gen->add_option("--out", out)->required();
  gen->add_option("--split", split);
  gen->add_option("--n-scenes", n_scenes);

  auto* col = app.add_subcommand("collect", "run epsilon-greedy collection episodes");
  col->add_option("--out", out)->required();
  col->add_option("--episodes", episodes);
  col->add_option("--policy", policy, "random | model:<checkpoint>");

  auto* tr = app.add_subcommand("train", "two-stage training");
  tr->add_option("--out", out)->required();
  tr->add_option("--stage", stage)->check(CLI::IsMember({"1", "2", "both"}));
  tr->add_option("--train", train_dir);
  tr->add_option("--heldout", heldout_dir);
  tr->add_option("--init", init, "checkpoint to start from");

  auto* ev = app.add_subcommand("eval", "binary accuracy and simulated grasping");
  ev->add_option("--checkpoint", ckpt)->required();
  ev->add_option("--data", data);
  ev->add_option("--sim-worlds", sim_worlds);
  ev->add_option("--model-name", model_name);
  ev->add_option("--train-set", train_set);
  ev->add_option("--test-set", test_set);
  ev->add_option("--metrics-out", metrics_out, "append result lines to this .jsonl file");

  auto* rep = app.add_subcommand("report", "result tables from evaluation logs");
  rep->add_option("--metrics", metrics_dir)->required();
  rep->add_option("--out", out);

  auto* viz = app.add_subcommand("viz-noise", "learned noise correction field");
  viz->add_option("--checkpoint", ckpt)->required();
  viz->add_option("--robot", robot);
  viz->add_option("--grid", grid);
  viz->add_option("--out", out);

  for (auto* sub : {gen, col, tr, ev, rep, viz}) {
    sub->add_option("--config", g.config);
    sub->add_option("--seed", g.seed);
    sub->add_flag("--deterministic", g.deterministic);
  }

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;
  for (auto* sub : {gen, col, tr, ev, rep, viz})
    if (sub->parsed() && sub->get_option("--seed")->count() > 0) g.seed_set = true;

  try {
    if (gen->parsed()) return cmd_generate(g, out, split, n_scenes);
    if (col->parsed()) return cmd_collect(g, out, episodes, policy);
    if (tr->parsed()) return cmd_train(g, out, stage, train_dir, heldout_dir, init);
    if (ev->parsed()) return cmd_eval(g, ckpt, data, sim_worlds, model_name, train_set, test_set, metrics_out);
    if (rep->parsed()) return cmd_report(metrics_dir, out);
    if (viz->parsed()) return cmd_viz(g, ckpt, robot, grid, out);
  } catch (const std::exception& e) {
    std::cerr << "rgrasp: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
