// Acceptance checklist: one pass/fail line per criterion, nonzero exit if
// any criterion fails. Runs the full gradient suite, the loss/metric
// oracles, an overfit training run, and the wiring/determinism checks.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "skyseg/dataset.hpp"
#include "skyseg/labels.hpp"
#include "skyseg/losses.hpp"
#include "skyseg/metrics.hpp"
#include "skyseg/network.hpp"
#include "skyseg/scene.hpp"
#include "skyseg/tiling.hpp"
#include "skyseg/train.hpp"
#include "skyseg/verify.hpp"

using namespace skyseg;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string& what, const std::string& detail = "") {
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << " - " << what;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n" << std::flush;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("skyseg_accept_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void gen_dataset(const fs::path& root, std::uint64_t seed, std::size_t count,
                 std::size_t size) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  std::vector<SampleInfo> manifest;
  for (std::size_t i = 0; i < count; ++i) {
    SceneSpec spec;
    spec.seed = seed + i;
    spec.height = spec.width = size;
    auto scene = generate_scene(spec);
    char id[8];
    std::snprintf(id, sizeof id, "%04zu", i);
    write_ppm(root / "images" / (std::string(id) + ".ppm"), scene.rgb);
    write_pgm(root / "masks" / (std::string(id) + ".pgm"), scene.mask);
    manifest.push_back({id, size, size, "dense20"});
  }
  write_manifest(root, manifest);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

NetworkConfig micro_config() {
  NetworkConfig cfg;
  cfg.task = Task::Dense20;
  cfg.sl_counts.assign(11, 1);
  cfg.growth = 2;
  cfg.stem_channels = 4;
  cfg.craspp_rates = {1, 2};
  cfg.craspp_width = 4;
  cfg.lkbr_k = 3;
  cfg.seed = 11;
  return cfg;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  auto r = verify_gradcheck();
  double elapsed = seconds_since(t0);
  report(1, r.passed && elapsed < 300.0, "gradient suite (layers, blocks, end-to-end)",
         "max rel err " + fmt(r.max_error) + ", " + fmt(elapsed) + "s");
}

void criterion_2() {
  auto r = verify_loss_oracle();
  report(2, r.passed, "loss oracles incl. exact perfect-prediction values",
         "max err " + fmt(r.max_error));
}

void criterion_3() {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> U(0.05, 1.0);
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t C = 2 + rng() % 4, N = 1 + rng() % 32;
    std::vector<Tensor<double>> probs, targets;
    for (std::size_t b = 0; b < 2; ++b) {
      std::vector<double> p(C * N), y(C * N, 0.0);
      for (std::size_t n = 0; n < N; ++n) {
        double s = 0;
        for (std::size_t c = 0; c < C; ++c) s += (p[c * N + n] = U(rng));
        for (std::size_t c = 0; c < C; ++c) p[c * N + n] /= s;
        y[(rng() % C) * N + n] = 1.0;
      }
      probs.push_back(Tensor<double>::from_data({1, C, N}, p));
      targets.push_back(Tensor<double>::from_data({1, C, N}, y));
    }
    LossConfig<double> cfg;
    cfg.combo = LossCombo::CEPlusSoftIoU;
    double total = total_loss(cfg, probs, targets, 0).item();
    double expect = 0;
    for (std::size_t b = 0; b < 2; ++b)
      expect += cross_entropy(probs[b], targets[b]).item() +
                soft_iou_loss(probs[b], targets[b]).item();
    ok = ok && total == expect;
  }
  report(3, ok, "total_loss(ce+soft_iou) equals the component sum bit-for-bit");
}

void criterion_4() {
  auto r = verify_metric_oracle();
  ConfusionMatrix cm(2);
  cm.add(0, 0, 3);
  cm.add(1, 0, 1);
  cm.add(0, 1, 2);
  bool hand = cm.iou(0).has_value() && *cm.iou(0) == 0.5;
  report(4, r.passed && hand, "metric brute-force oracles + TP=3,FP=1,FN=2 -> IoU 0.5",
         "max err " + fmt(r.max_error));
}

void criterion_5() {
  auto dir = scratch("overfit");
  gen_dataset(dir / "data", 7, 4, 64);

  RunConfig cfg;
  cfg.task = Task::Dense20;
  cfg.sl_counts = reduced_sl_profile();
  cfg.growth = 16;
  cfg.seed = 7;
  cfg.loss = LossCombo::CEPlusSoftIoU;
  cfg.lr = 0.0001;
  cfg.batch = 1;
  cfg.epochs = 125;  // 4 samples per epoch, capped at 500 steps
  cfg.max_steps = 500;
  cfg.checkpoint_every = 0;
  cfg.tile = 64;
  cfg.data_dir = dir / "data";
  cfg.out_dir = dir / "out";

  auto t0 = std::chrono::steady_clock::now();
  auto res = train_run(cfg);
  double elapsed = seconds_since(t0);
  bool ok = res.train_pixel_accuracy >= 0.95 && res.semantic_soft_iou <= -0.6 &&
            elapsed < 1200.0;
  report(5, ok, "500-step overfit on 4 synthetic 64x64 scenes",
         "PA " + fmt(res.train_pixel_accuracy) + ", soft-IoU " +
             fmt(res.semantic_soft_iou) + ", " + fmt(elapsed) + "s");
  fs::remove_all(dir);
}

void criterion_6() {
  auto net = Network<float>::build(micro_config());
  SceneSpec spec;
  spec.seed = 13;
  spec.height = spec.width = 32;
  auto scene = generate_scene(spec);
  auto img = image_to_tensor<float>(scene.rgb);
  auto targets = branch_targets<float>(Task::Dense20, scene.mask, net.cfg.branch_specs());

  auto edge_grad_norm = [&](const std::vector<double>& bw) {
    net.params.zero_grads();
    LossConfig<float> lcfg;
    lcfg.combo = LossCombo::CEPlusSoftIoU;
    lcfg.branch_weights.assign(bw.begin(), bw.end());
    total_loss(lcfg, net.forward(img), targets, 0).backward();
    double edge = 0, trunk = 0;
    for (auto& [name, t] : net.params.params()) {
      bool is_edge = name.rfind("edge_multi.", 0) == 0 || name.rfind("edge_binary.", 0) == 0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        double g = t.grad_at(i);
        (is_edge ? edge : trunk) += g * g;
      }
    }
    return std::pair<double, double>{edge, trunk};
  };

  auto [edge_off, trunk_off] = edge_grad_norm({1.0, 0.0, 0.0});
  auto [edge_on, trunk_on] = edge_grad_norm({1.0, 1.0, 1.0});
  bool ok = edge_off == 0.0 && trunk_off > 0.0 && edge_on > 0.0 && trunk_on > 0.0;
  report(6, ok, "branch_weights (1,0,0) silences edge-branch gradients, (1,1,1) does not",
         "edge grad^2 off " + fmt(edge_off) + ", on " + fmt(edge_on));
}

void criterion_7() {
  auto g = TileGrid::make(1024, 1024, 512, 0.5);
  bool nine = g.count() == 9;

  std::mt19937 rng(77);
  std::uniform_real_distribution<float> U(0.0f, 1.0f);
  const std::size_t C = 4;
  std::vector<float> map(C * 1024 * 1024);
  for (auto& v : map) v = U(rng);

  std::vector<std::vector<float>> tiles;
  for (std::size_t i = 0; i < g.count(); ++i) tiles.push_back(extract_tile(g, map, C, i));
  auto out = stitch(g, tiles, C);
  float worst = 0;
  for (std::size_t i = 0; i < map.size(); ++i)
    worst = std::max(worst, std::abs(out[i] - map[i]));

  auto g0 = TileGrid::make(1024, 1024, 512, 0.0);
  std::vector<std::vector<float>> tiles0;
  for (std::size_t i = 0; i < g0.count(); ++i) tiles0.push_back(extract_tile(g0, map, C, i));
  bool exact = stitch(g0, tiles0, C) == map;

  report(7, nine && worst < 1e-7f && exact,
         "1024x1024/512/0.5 -> 9 tiles; stitch round trips",
         fmt(g.count()) + " tiles, max err " + fmt(worst) +
             (exact ? ", overlap-0 bit-exact" : ", overlap-0 NOT exact"));
}

void criterion_8() {
  bool law = true;
  for (auto profile : {full_sl_profile(), reduced_sl_profile()}) {
    NetworkConfig cfg;
    cfg.sl_counts = profile;
    auto net = Network<float>::build(cfg);
    std::size_t channels = cfg.stem_channels;
    for (std::size_t i = 0; i < 5; ++i) {
      const auto& fdb = net.encoder[i].fdb;
      law = law && fdb.out_channels() == channels + profile[i] * cfg.growth;
      channels = fdb.out_channels() + 2 * profile[i] * cfg.growth;
    }
    law = law && net.bottleneck.out_channels() == channels + profile[5] * cfg.growth;
  }

  // branch contract: class counts per task at input resolution
  bool shapes = true;
  auto img = TensorF::uniform({1, 3, 32, 32}, 8, 0.0f, 1.0f);
  struct Case {
    Task task;
    std::vector<std::size_t> classes;
  };
  for (auto& c : std::vector<Case>{{Task::Dense20, {20, 20, 2}},
                                   {Task::Lane13, {13, 2}},
                                   {Task::Category11, {11}},
                                   {Task::EdgeBinary, {2}},
                                   {Task::EdgeMulti, {20}}}) {
    auto cfg = micro_config();
    cfg.task = c.task;
    auto outs = Network<float>::build(cfg).forward(img);
    shapes = shapes && outs.size() == c.classes.size();
    for (std::size_t b = 0; b < outs.size() && shapes; ++b)
      shapes = outs[b].dims() == Shape{1, c.classes[b], 32, 32};
  }

  NetworkConfig full;
  auto count = Network<float>::build(full).parameter_count();
  std::cout << "  full-profile parameter count: " << count
            << " (reference implementation reports ~137M; no tolerance asserted)\n";
  report(8, law && shapes, "FDB channel law and per-task output shapes",
         "param count " + std::to_string(count));
}

void criterion_9() {
  auto dir = scratch("determinism");
  gen_dataset(dir / "data", 5, 2, 32);

  RunConfig cfg;
  cfg.task = Task::Dense20;
  cfg.sl_counts.assign(11, 1);
  cfg.growth = 2;
  cfg.stem_channels = 4;
  cfg.seed = 3;
  cfg.lr = 0.001;
  cfg.epochs = 3;
  cfg.checkpoint_every = 0;
  cfg.tile = 32;
  cfg.data_dir = dir / "data";

  cfg.out_dir = dir / "a";
  train_run(cfg);
  cfg.out_dir = dir / "b";
  train_run(cfg);

  bool weights_same = slurp(dir / "a/weights.ssnw") == slurp(dir / "b/weights.ssnw") &&
                      !slurp(dir / "a/weights.ssnw").empty();
  bool logs_same = slurp(dir / "a/train_log.csv") == slurp(dir / "b/train_log.csv") &&
                   !slurp(dir / "a/train_log.csv").empty();
  report(9, weights_same && logs_same,
         "identical config/seed -> bit-identical weights and logs");
  fs::remove_all(dir);
}

void criterion_10() {
  bool ok = true;
  for (auto map : {dense20_to_potsdam6(), dense20_to_category11()}) {
    try {
      map.validate();
    } catch (const std::exception&) {
      ok = false;
    }
    ok = ok && map.to_target.size() == 20;
    for (auto t : map.to_target) ok = ok && t < map.target_names.size();
  }
  report(10, ok, "all 20 dense classes map under both merging policies");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  std::cout << (failures == 0 ? "all criteria passed\n"
                              : std::to_string(failures) + " criteria failed\n");
  return failures == 0 ? 0 : 1;
}
