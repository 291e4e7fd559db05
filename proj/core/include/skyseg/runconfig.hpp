#pragma once

// Text run configuration: UTF-8 "key = value" lines, '#' comments, booleans
// true/false, lists comma-separated. Unknown keys are rejected. The
// SKYSEG_SEED environment variable overrides the configured seed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skyseg/losses.hpp"
#include "skyseg/network.hpp"

namespace skyseg {

struct RunConfig {
  Task task = Task::Dense20;
  std::vector<std::size_t> sl_counts = full_sl_profile();
  std::size_t growth = 16;
  std::size_t stem_channels = 48;
  bool lkbr_on_skips = true;
  std::uint64_t seed = 0;

  LossCombo loss = LossCombo::CEPlusSoftIoU;
  std::vector<double> branch_weights;  // empty = 1.0 each
  std::size_t schedule_ramp_epochs = 20;
  bool scheduled_class_weights = false;
  bool dice_squared_sums = false;

  double lr = 0.0001;
  std::size_t batch = 1;
  std::size_t epochs = 60;
  std::size_t max_steps = 0;  // 0 = no cap
  std::size_t checkpoint_every = 10;
  bool flips = false;

  std::size_t tile = 512;
  double train_overlap = 0.5;
  double eval_overlap = 0.1;

  std::filesystem::path data_dir;
  std::filesystem::path out_dir = ".";
  std::filesystem::path weights;

  NetworkConfig network_config() const {
    NetworkConfig nc;
    nc.task = task;
    nc.sl_counts = sl_counts;
    nc.growth = growth;
    nc.stem_channels = stem_channels;
    nc.lkbr_on_skips = lkbr_on_skips;
    nc.seed = seed;
    return nc;
  }
};

RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text);

// Applies the SKYSEG_SEED override if the variable is set.
void apply_env_seed(RunConfig& cfg);

}  // namespace skyseg
