// skyseg command-line tool: synthetic data generation, training,
// evaluation, whole-image inference, and self-check suites.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "skyseg/dataset.hpp"
#include "skyseg/errors.hpp"
#include "skyseg/runconfig.hpp"
#include "skyseg/scene.hpp"
#include "skyseg/train.hpp"
#include "skyseg/verify.hpp"

namespace {

using namespace skyseg;

int cmd_gen_data(std::uint64_t seed, std::size_t count, std::size_t size,
                 const std::string& out) {
  std::filesystem::path root(out);
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "masks");
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
  std::cout << "wrote " << count << " samples to " << out << "\n";
  return 0;
}

RunConfig load_config(const std::string& path, const std::string& data,
                      const std::string& out, const std::string& weights) {
  RunConfig cfg = path.empty() ? RunConfig{} : parse_run_config(path);
  if (!data.empty()) cfg.data_dir = data;
  if (!out.empty()) cfg.out_dir = out;
  if (!weights.empty()) cfg.weights = weights;
  apply_env_seed(cfg);
  return cfg;
}

int cmd_train(const RunConfig& cfg) {
  auto res = train_run(cfg);
  std::cout << "trained " << res.steps << " steps, final loss " << res.final_loss
            << ", train PA " << res.train_pixel_accuracy << ", semantic soft-IoU "
            << res.semantic_soft_iou << "\n"
            << "weights: " << res.weights_path.string() << "\n"
            << "log: " << res.log_path.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, bool oracle) {
  auto res = evaluate(cfg, oracle);
  for (std::size_t b = 0; b < res.branch_names.size(); ++b) {
    const auto& cm = res.confusion[b];
    std::cout << res.branch_names[b] << ": mIoU " << cm.mean_iou() << ", FW-IoU "
              << cm.fw_iou() << ", PA " << cm.pixel_accuracy() << "\n";
    if (b < res.csv_paths.size())
      std::cout << "  " << res.csv_paths[b].string() << "\n";
  }
  return 0;
}

int cmd_infer(const RunConfig& cfg, const InferOptions& opt) {
  infer_image(cfg, opt);
  std::cout << "wrote " << opt.out_mask.string() << "\n";
  return 0;
}

int cmd_verify(const std::string& suite) {
  bool all_passed = true;
  auto names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  for (const auto& name : names) {
    auto r = run_suite(name);
    std::cout << r.name << ": " << (r.passed ? "PASS" : "FAIL") << " (max error "
              << r.max_error << ")\n"
              << r.detail;
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task aerial segmentation toolkit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::uint64_t gen_seed = 0;
  std::size_t gen_count = 4, gen_size = 64;
  std::string gen_out = "data";
  gen->add_option("--seed", gen_seed);
  gen->add_option("--count", gen_count);
  gen->add_option("--size", gen_size);
  gen->add_option("--out", gen_out)->required();

  std::string config_path, data_dir, out_dir, weights_path;
  auto add_common = [&](CLI::App* c, bool need_weights) {
    c->add_option("--config", config_path);
    c->add_option("--data", data_dir);
    c->add_option("--out", out_dir);
    auto* w = c->add_option("--weights", weights_path);
    if (need_weights) w->required();
  };

  auto* train = app.add_subcommand("train", "train a network");
  add_common(train, false);

  auto* eval = app.add_subcommand("eval", "evaluate weights on a dataset");
  bool oracle = false;
  add_common(eval, false);
  eval->add_flag("--oracle", oracle, "score ground truth against itself");

  auto* infer = app.add_subcommand("infer", "segment one image");
  std::string image_path, out_mask, out_edges, gsd;
  infer->add_option("--config", config_path);
  infer->add_option("--weights", weights_path)->required();
  infer->add_option("image", image_path)->required();
  infer->add_option("--out", out_mask)->required();
  infer->add_option("--edges", out_edges);
  infer->add_option("--gsd", gsd, "source:target in cm/px");

  auto* verify = app.add_subcommand("verify", "run a self-check suite");
  std::string suite = "all";
  verify->add_option("--suite", suite);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(gen_seed, gen_count, gen_size, gen_out);
    if (*train) return cmd_train(load_config(config_path, data_dir, out_dir, weights_path));
    if (*eval) {
      auto cfg = load_config(config_path, data_dir, out_dir, weights_path);
      if (!oracle && cfg.weights.empty())
        throw skyseg::ConfigError("eval requires --weights (or --oracle)");
      return cmd_eval(cfg, oracle);
    }
    if (*infer) {
      auto cfg = load_config(config_path, "", "", weights_path);
      skyseg::InferOptions opt;
      opt.image_path = image_path;
      opt.out_mask = out_mask;
      opt.out_edges = out_edges;
      if (!gsd.empty()) {
        auto colon = gsd.find(':');
        if (colon == std::string::npos)
          throw skyseg::ConfigError("--gsd expects source:target");
        try {
          opt.source_gsd = std::stod(gsd.substr(0, colon));
          opt.target_gsd = std::stod(gsd.substr(colon + 1));
        } catch (const std::exception&) {
          throw skyseg::ConfigError("--gsd expects numeric source:target");
        }
      }
      return cmd_infer(cfg, opt);
    }
    if (*verify) return cmd_verify(suite);
  } catch (const skyseg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const skyseg::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const skyseg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const skyseg::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
