#pragma once

// Training, evaluation, and whole-image inference drivers built on the
// network, loss, tiling, and dataset modules. Training is f32, batch 1,
// ADAM, deterministic under a fixed seed.

#include <filesystem>
#include <string>
#include <vector>

#include "skyseg/dataset.hpp"
#include "skyseg/image.hpp"
#include "skyseg/metrics.hpp"
#include "skyseg/network.hpp"
#include "skyseg/runconfig.hpp"

namespace skyseg {

struct TrainResult {
  std::size_t steps = 0;
  double final_loss = 0.0;
  double train_pixel_accuracy = 0.0;   // semantic branch over the train set
  double semantic_soft_iou = 0.0;      // loss value, in [-1, 0]
  std::filesystem::path weights_path;
  std::filesystem::path log_path;
};

// Trains per the config, writes checkpoints every checkpoint_every epochs
// plus final weights ("weights.ssnw") and a step log ("train_log.csv") under
// out_dir. Throws NumericError when the loss stops being finite.
TrainResult train_run(const RunConfig& cfg);

// Tiled sliding-window inference over a whole image: per-branch [C,H,W]
// probability maps at the original resolution. Pads to a 32-multiple
// internally and crops back.
std::vector<std::vector<float>> infer_full(const Network<float>& net, const Image& img,
                                           std::size_t tile, double overlap);

struct EvalResult {
  std::vector<std::string> branch_names;
  std::vector<ConfusionMatrix> confusion;
  std::vector<std::filesystem::path> csv_paths;
};

// Scores the dataset branch by branch and writes metrics_<branch>.csv files
// under out_dir. With oracle_mode the ground truth is scored against itself
// (a pipeline self-check; every defined IoU is 1).
EvalResult evaluate(const RunConfig& cfg, bool oracle_mode = false);

struct InferOptions {
  std::filesystem::path image_path;
  std::filesystem::path out_mask;
  std::filesystem::path out_edges;  // empty = skip
  double source_gsd = 0.0, target_gsd = 0.0;  // 0 = no rescale
};

void infer_image(const RunConfig& cfg, const InferOptions& opt);

}  // namespace skyseg
