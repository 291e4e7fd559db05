#include "skyseg/train.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "skyseg/errors.hpp"
#include "skyseg/labels.hpp"
#include "skyseg/losses.hpp"
#include "skyseg/tiling.hpp"
#include "skyseg/weights_io.hpp"

namespace skyseg {

namespace {

std::size_t round_up32(std::size_t v) { return (v + 31) / 32 * 32; }

// One training crop: image and dense mask, dims divisible by 32.
struct Crop {
  Image img;
  LabelMap mask;
};

Image crop_image(const Image& src, std::size_t y0, std::size_t x0, std::size_t s) {
  Image out = Image::blank(s, s);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < s; ++y)
      for (std::size_t x = 0; x < s; ++x) out.at(c, y, x) = src.at(c, y0 + y, x0 + x);
  return out;
}

LabelMap crop_mask(const LabelMap& src, std::size_t y0, std::size_t x0, std::size_t s) {
  LabelMap out = LabelMap::filled(s, s, 0);
  for (std::size_t y = 0; y < s; ++y)
    for (std::size_t x = 0; x < s; ++x) out.at(y, x) = src.at(y0 + y, x0 + x);
  return out;
}

std::vector<Crop> training_crops(const Dataset& ds, const RunConfig& cfg) {
  std::vector<Crop> crops;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    Image img = ds.image(i);
    LabelMap mask = ds.mask(i);
    if (img.h != mask.h || img.w != mask.w)
      throw DataError("sample " + ds.samples[i].id + ": image/mask dims differ");
    if (img.h < cfg.tile || img.w < cfg.tile) {
      if (img.h % 32 || img.w % 32)
        throw DataError("sample " + ds.samples[i].id +
                        " is smaller than the tile size and not a multiple of 32");
      crops.push_back({std::move(img), std::move(mask)});
    } else {
      if (cfg.tile % 32) throw ConfigError("tile size must be a multiple of 32");
      auto grid = TileGrid::make(img.h, img.w, cfg.tile, cfg.train_overlap);
      for (std::size_t t = 0; t < grid.count(); ++t) {
        auto o = grid.origin(t);
        crops.push_back({crop_image(img, o.y, o.x, cfg.tile),
                         crop_mask(mask, o.y, o.x, cfg.tile)});
      }
    }
  }
  return crops;
}

// inverse pixel-frequency target weights for the semantic branch,
// normalized to mean 1
std::vector<float> frequency_weights(const std::vector<Crop>& crops, Task task,
                                     std::size_t classes) {
  std::vector<double> counts(classes, 0.0);
  double total = 0.0;
  for (const auto& c : crops) {
    LabelMap sem = branch_label_maps(task, c.mask)[0];
    for (auto v : sem.v) {
      counts[v] += 1.0;
      total += 1.0;
    }
  }
  std::vector<double> inv(classes);
  double mean = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    inv[c] = counts[c] > 0 ? total / counts[c] : 0.0;
    mean += inv[c];
  }
  mean /= double(classes);
  std::vector<float> out(classes, 1.0f);
  if (mean > 0)
    for (std::size_t c = 0; c < classes; ++c) out[c] = float(inv[c] / mean);
  return out;
}

double semantic_pa(const TensorF& probs, const LabelMap& gt) {
  const std::size_t classes = probs.dims()[1];
  const std::size_t hw = gt.v.size();
  std::vector<float> flat(probs.data().begin(), probs.data().end());
  auto pred = argmax_map(flat, classes, gt.h, gt.w);
  std::size_t hit = 0;
  for (std::size_t p = 0; p < hw; ++p)
    if (pred[p] == gt.v[p]) ++hit;
  return double(hit) / double(hw);
}

}  // namespace

TrainResult train_run(const RunConfig& cfg) {
  Dataset ds = Dataset::open(cfg.data_dir);
  auto crops = training_crops(ds, cfg);
  if (crops.empty()) throw DataError("no training crops");

  auto net = Network<float>::build(cfg.network_config());
  const auto specs = cfg.network_config().branch_specs();

  LossConfig<float> loss_cfg;
  loss_cfg.combo = cfg.loss;
  loss_cfg.branch_weights.assign(cfg.branch_weights.begin(), cfg.branch_weights.end());
  loss_cfg.dice_squared_sums = cfg.dice_squared_sums;
  if (cfg.scheduled_class_weights) {
    WeightSchedule<float> sched;
    sched.start.assign(specs[0].classes, 1.0f);
    sched.target = frequency_weights(crops, cfg.task, specs[0].classes);
    sched.ramp_epochs = cfg.schedule_ramp_epochs;
    loss_cfg.schedule = std::move(sched);
  }

  AdamState<float> adam;
  adam.lr = float(cfg.lr);

  std::filesystem::create_directories(cfg.out_dir);
  std::ostringstream log;
  log << "epoch,step,total_loss,semantic_region,train_pa\n";
  log.precision(8);

  std::mt19937_64 flip_rng(cfg.seed ^ 0xF11Full);
  std::size_t step = 0;
  double last_loss = 0.0;
  bool stop = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    for (std::size_t k = 0; k < crops.size() && !stop; ++k) {
      Image img = crops[k].img;
      LabelMap mask = crops[k].mask;
      if (cfg.flips) {
        switch (flip_rng() % 3) {
          case 1: flip_augment(img, mask, FlipMode::Horizontal); break;
          case 2: flip_augment(img, mask, FlipMode::Vertical); break;
          default: break;
        }
      }
      TensorF x = image_to_tensor<float>(img);
      auto gt_maps = branch_label_maps(cfg.task, mask);
      std::vector<TensorF> targets;
      for (std::size_t b = 0; b < specs.size(); ++b)
        targets.push_back(onehot_mask<float>(gt_maps[b], specs[b].classes));

      auto outputs = net.forward(x);
      TensorF loss = total_loss(loss_cfg, outputs, targets, epoch);
      last_loss = loss.item();
      if (!std::isfinite(last_loss))
        throw NumericError("training diverged at step " + std::to_string(step) +
                           " (loss " + std::to_string(last_loss) + ")");
      loss.backward();
      adam.step(net.params);
      net.params.zero_grads();

      double region = soft_iou_loss(outputs[0].detach(), targets[0]).item();
      double pa = semantic_pa(outputs[0], gt_maps[0]);
      log << epoch << ',' << step << ',' << last_loss << ',' << region << ',' << pa
          << '\n';
      ++step;
      if (cfg.max_steps && step >= cfg.max_steps) stop = true;
    }
    if (cfg.checkpoint_every && (epoch + 1) % cfg.checkpoint_every == 0 && !stop)
      save_network(cfg.out_dir / ("weights_epoch_" + std::to_string(epoch + 1) + ".ssnw"),
                   net);
  }

  TrainResult res;
  res.steps = step;
  res.final_loss = last_loss;
  res.weights_path = cfg.out_dir / "weights.ssnw";
  res.log_path = cfg.out_dir / "train_log.csv";
  save_network(res.weights_path, net);

  // post-training sweep over the train crops for the acceptance numbers
  double pa_sum = 0.0, iou_sum = 0.0;
  for (const auto& c : crops) {
    auto outputs = net.forward(image_to_tensor<float>(c.img));
    auto sem_gt = branch_label_maps(cfg.task, c.mask)[0];
    pa_sum += semantic_pa(outputs[0], sem_gt);
    iou_sum += soft_iou_loss(outputs[0].detach(),
                             onehot_mask<float>(sem_gt, specs[0].classes))
                   .item();
  }
  res.train_pixel_accuracy = pa_sum / double(crops.size());
  res.semantic_soft_iou = iou_sum / double(crops.size());
  log << "final,," << res.final_loss << ',' << res.semantic_soft_iou << ','
      << res.train_pixel_accuracy << '\n';

  auto tmp = res.log_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << log.str();
  }
  std::filesystem::rename(tmp, res.log_path);
  return res;
}

std::vector<std::vector<float>> infer_full(const Network<float>& net, const Image& img,
                                           std::size_t tile, double overlap) {
  const std::size_t ph = round_up32(img.h), pw = round_up32(img.w);
  Image padded = Image::blank(ph, pw);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < img.h; ++y)
      for (std::size_t x = 0; x < img.w; ++x) padded.at(c, y, x) = img.at(c, y, x);

  std::size_t s = std::min({tile, ph, pw});
  s = s / 32 * 32;
  if (s == 0) throw ShapeError("image too small to tile");
  auto grid = TileGrid::make(ph, pw, s, overlap);

  const auto specs = net.cfg.branch_specs();
  std::vector<std::vector<std::vector<float>>> tiles(specs.size());
  for (std::size_t t = 0; t < grid.count(); ++t) {
    auto o = grid.origin(t);
    TensorF x = image_to_tensor<float>(crop_image(padded, o.y, o.x, s));
    auto outputs = net.forward(x);
    for (std::size_t b = 0; b < outputs.size(); ++b)
      tiles[b].emplace_back(outputs[b].data().begin(), outputs[b].data().end());
  }

  std::vector<std::vector<float>> maps;
  for (std::size_t b = 0; b < specs.size(); ++b) {
    auto full = stitch(grid, tiles[b], specs[b].classes);
    // crop the padding back off
    std::vector<float> out(specs[b].classes * img.h * img.w);
    for (std::size_t c = 0; c < specs[b].classes; ++c)
      for (std::size_t y = 0; y < img.h; ++y)
        for (std::size_t x = 0; x < img.w; ++x)
          out[(c * img.h + y) * img.w + x] = full[(c * ph + y) * pw + x];
    maps.push_back(std::move(out));
  }
  return maps;
}

EvalResult evaluate(const RunConfig& cfg, bool oracle_mode) {
  Dataset ds = Dataset::open(cfg.data_dir);
  auto net = Network<float>::build(cfg.network_config());
  if (!oracle_mode) {
    if (cfg.weights.empty()) throw ConfigError("eval requires a weights path");
    load_network(cfg.weights, net);
  }
  const auto specs = cfg.network_config().branch_specs();

  EvalResult res;
  for (const auto& s : specs) {
    res.branch_names.push_back(s.name);
    res.confusion.emplace_back(s.classes);
  }

  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    Image img = ds.image(i);
    LabelMap mask = ds.mask(i);
    auto gts = branch_label_maps(cfg.task, mask);
    if (oracle_mode) {
      for (std::size_t b = 0; b < specs.size(); ++b)
        res.confusion[b].accumulate(gts[b].v, gts[b].v);
      continue;
    }
    auto maps = infer_full(net, img, cfg.tile, cfg.eval_overlap);
    for (std::size_t b = 0; b < specs.size(); ++b) {
      auto pred = argmax_map(maps[b], specs[b].classes, img.h, img.w);
      res.confusion[b].accumulate(gts[b].v, pred);
    }
  }

  std::filesystem::create_directories(cfg.out_dir);
  for (std::size_t b = 0; b < specs.size(); ++b) {
    std::vector<std::string> names(specs[b].classes);
    if (specs[b].classes == 20) names = dense20_names();
    else if (specs[b].classes == 13) names = lane13_names();
    else if (specs[b].classes == 11) names = category11_names();
    else
      for (std::size_t c = 0; c < names.size(); ++c) names[c] = "class" + std::to_string(c);
    auto path = cfg.out_dir / ("metrics_" + specs[b].name + ".csv");
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw DataError("cannot write " + tmp.string());
      out << res.confusion[b].report(names);
    }
    std::filesystem::rename(tmp, path);
    res.csv_paths.push_back(path);
  }
  return res;
}

void infer_image(const RunConfig& cfg, const InferOptions& opt) {
  Image img = read_ppm(opt.image_path);
  if (opt.source_gsd > 0.0 && opt.target_gsd > 0.0)
    img = rescale_gsd(img, opt.source_gsd, opt.target_gsd);

  auto net = Network<float>::build(cfg.network_config());
  if (cfg.weights.empty()) throw ConfigError("infer requires a weights path");
  load_network(cfg.weights, net);
  const auto specs = cfg.network_config().branch_specs();

  auto maps = infer_full(net, img, cfg.tile, cfg.eval_overlap);
  LabelMap mask{img.h, img.w, argmax_map(maps[0], specs[0].classes, img.h, img.w)};
  write_pgm(opt.out_mask, mask);

  if (!opt.out_edges.empty()) {
    std::size_t edge_branch = specs.size();
    for (std::size_t b = 0; b < specs.size(); ++b)
      if (specs[b].name == "edge_binary" || specs[b].name == "binary") edge_branch = b;
    if (edge_branch == specs.size())
      throw ConfigError("this task has no edge branch to write");
    LabelMap edges{img.h, img.w,
                   argmax_map(maps[edge_branch], specs[edge_branch].classes, img.h, img.w)};
    write_pgm(opt.out_edges, edges);
  }
}

}  // namespace skyseg
