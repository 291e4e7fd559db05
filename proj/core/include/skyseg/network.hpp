#pragma once

// Full network assembly: stem, five encoder stages (FDB + FRSR +
// downsampling transition), FDB+CRASPP bottleneck with a residual path
// around it, a two-stage shared decoder, and per-task branches that
// replicate the remaining three decoder stages plus a 1x1 head and softmax.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skyseg/blocks.hpp"

namespace skyseg {

enum class Task { Dense20, Lane13, Category11, EdgeBinary, EdgeMulti };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::Dense20: return "dense20";
    case Task::Lane13: return "lane13";
    case Task::Category11: return "category11";
    case Task::EdgeBinary: return "edge-binary";
    case Task::EdgeMulti: return "edge-multi";
  }
  return "?";
}

Task parse_task(const std::string& s);

struct BranchSpec {
  std::string name;
  std::size_t classes;
};

inline std::vector<std::size_t> full_sl_profile() { return {4, 5, 7, 10, 12, 15, 12, 10, 7, 5, 4}; }
inline std::vector<std::size_t> reduced_sl_profile() { return {1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1}; }

struct NetworkConfig {
  Task task = Task::Dense20;
  std::vector<std::size_t> sl_counts = full_sl_profile();
  std::size_t growth = 16;
  std::size_t stem_channels = 48;
  std::vector<std::size_t> craspp_rates = {1, 6, 12, 18};
  std::size_t craspp_width = 128;
  std::size_t lkbr_k = 7;
  bool lkbr_on_skips = true;
  bool fdb_input_residual = true;
  bool decoder_fdb_concat_input = false;
  std::uint64_t seed = 0;

  std::vector<BranchSpec> branch_specs() const {
    switch (task) {
      case Task::Dense20:
        return {{"semantic", 20}, {"edge_multi", 20}, {"edge_binary", 2}};
      case Task::Lane13:
        return {{"semantic", 13}, {"binary", 2}};
      case Task::Category11:
        return {{"semantic", 11}};
      case Task::EdgeBinary:
        return {{"edge_binary", 2}};
      case Task::EdgeMulti:
        return {{"edge_multi", 20}};
    }
    throw ConfigError("unknown task");
  }

  void validate() const {
    if (sl_counts.size() != 11)
      throw ConfigError("sl_counts must list 11 values (5 down, bottleneck, 5 up)");
    for (std::size_t n : sl_counts)
      if (n == 0) throw ConfigError("sl_counts entries must be positive");
    if (growth == 0 || stem_channels == 0) throw ConfigError("growth/stem_channels must be positive");
    if (craspp_rates.empty()) throw ConfigError("craspp_rates must be non-empty");
    if (craspp_width == 0) throw ConfigError("craspp_width must be positive");
    if (lkbr_k == 0 || lkbr_k % 2 == 0) throw ConfigError("lkbr_k must be odd");
  }
};

template <class T>
struct Network {
  NetworkConfig cfg;
  ParamRegistry<T> params;

  Conv2dLayer<T> stem;

  struct EncoderStage {
    FDBUnit<T> fdb;
    FRSRUnit<T> frsr;
    DoSUnit<T> dos;
    std::optional<LKBRUnit<T>> skip_lkbr;
    std::size_t skip_channels = 0;
  };
  std::vector<EncoderStage> encoder;  // 5 stages

  FDBUnit<T> bottleneck;
  CRASPPUnit<T> craspp;

  struct DecoderStage {
    UpSUnit<T> ups;
    FDBUnit<T> fdb;
  };
  std::vector<DecoderStage> shared_decoder;  // 2 stages, then the branches split

  struct Branch {
    std::string name;
    std::size_t classes = 0;
    std::vector<DecoderStage> stages;  // 3 stages
    Conv2dLayer<T> head;
  };
  std::vector<Branch> branches;

  static Network build(const NetworkConfig& cfg) {
    cfg.validate();
    Network net;
    net.cfg = cfg;
    net.params = ParamRegistry<T>(cfg.seed);
    auto& reg = net.params;
    const std::size_t g = cfg.growth;

    net.stem = Conv2dLayer<T>(reg, "stem", cfg.stem_channels, 3, 3, 3);

    // Encoder. Stage i: FDB, then FRSR over the FDB output; the FDB output
    // concatenated with the FRSR main stream feeds the DoS transition, and
    // the FRSR pooling-stream tap (already at half resolution) is joined
    // back in after downsampling.
    std::size_t channels = cfg.stem_channels;
    std::vector<std::size_t> skip_channels;
    for (std::size_t i = 0; i < 5; ++i) {
      const std::size_t n = cfg.sl_counts[i];
      const std::size_t feats = n * g;
      EncoderStage st;
      std::string prefix = "enc" + std::to_string(i);
      st.fdb = FDBUnit<T>(reg, prefix + ".fdb", channels, n, g, true, cfg.fdb_input_residual);
      const std::size_t fdb_out = st.fdb.out_channels();
      st.frsr = FRSRUnit<T>(reg, prefix + ".frsr", fdb_out, feats, i == 0);
      st.dos = DoSUnit<T>(reg, prefix + ".dos", fdb_out, fdb_out + feats, i == 0 ? 1 : 3);
      if (cfg.lkbr_on_skips) {
        st.skip_lkbr.emplace(reg, prefix + ".skip_lkbr", fdb_out, cfg.lkbr_k);
        st.skip_channels = LKBRUnit<T>::kWidth;
      } else {
        st.skip_channels = fdb_out;
      }
      skip_channels.push_back(st.skip_channels);
      net.encoder.push_back(std::move(st));
      channels = fdb_out + 2 * feats;  // DoS output + pooling-stream tap
    }

    // Bottleneck FDB + CRASPP, fused back to the bottleneck input width so
    // the residual path from the last downsampling output can be added.
    net.bottleneck = FDBUnit<T>(reg, "mid.fdb", channels, cfg.sl_counts[5], g, true,
                                cfg.fdb_input_residual);
    net.craspp = CRASPPUnit<T>(reg, "mid.craspp", net.bottleneck.out_channels(),
                               cfg.craspp_rates, cfg.craspp_width, channels);
    std::size_t z = channels;

    auto make_decoder_stage = [&](const std::string& prefix, std::size_t stage_idx,
                                  std::size_t in_ch) {
      const std::size_t n = cfg.sl_counts[6 + stage_idx];
      DecoderStage st;
      st.ups = UpSUnit<T>(reg, prefix + ".ups", n * g, in_ch);
      const std::size_t skip = skip_channels[4 - stage_idx];
      st.fdb = FDBUnit<T>(reg, prefix + ".fdb", n * g + skip, n, g,
                          cfg.decoder_fdb_concat_input, cfg.fdb_input_residual);
      return st;
    };

    for (std::size_t j = 0; j < 2; ++j) {
      auto st = make_decoder_stage("dec" + std::to_string(j), j, z);
      z = st.fdb.out_channels();
      net.shared_decoder.push_back(std::move(st));
    }

    const auto specs = cfg.branch_specs();
    for (std::size_t b = 0; b < specs.size(); ++b) {
      reg.reseed_offset((b + 1) * 1000000ull);
      Branch br;
      br.name = specs[b].name;
      br.classes = specs[b].classes;
      std::size_t bz = z;
      for (std::size_t j = 2; j < 5; ++j) {
        auto st = make_decoder_stage(br.name + ".dec" + std::to_string(j), j, bz);
        bz = st.fdb.out_channels();
        br.stages.push_back(std::move(st));
      }
      br.head = Conv2dLayer<T>(reg, br.name + ".head", br.classes, bz, 1, 1);
      net.branches.push_back(std::move(br));
    }
    return net;
  }

  // image [1,3,H,W] with H,W divisible by 32 -> one probability map per
  // branch, each [1,classes,H,W] summing to 1 over classes at every pixel.
  std::vector<Tensor<T>> forward(const Tensor<T>& image) const {
    if (image.rank() != 4 || image.dims()[1] != 3)
      throw ShapeError("forward: image must be [N,3,H,W]");
    if (image.dims()[2] % 32 != 0 || image.dims()[3] % 32 != 0)
      throw ShapeError("forward: spatial dims must be divisible by 32, got " +
                       shape_str(image.dims()));

    Tensor<T> x = stem(image);
    std::vector<Tensor<T>> skips;
    for (const auto& st : encoder) {
      Tensor<T> d = st.fdb(x);
      skips.push_back(st.skip_lkbr ? (*st.skip_lkbr)(d) : d);
      auto fr = st.frsr.forward(d);
      Tensor<T> down = st.dos(concat<T>({d, fr.main}, 1));
      x = concat<T>({down, fr.tap}, 1);
    }

    Tensor<T> mid = craspp(bottleneck(x));
    Tensor<T> z = add(mid, x);  // residual path around the bottleneck

    auto run_stage = [&](const DecoderStage& st, const Tensor<T>& in, std::size_t stage_idx) {
      Tensor<T> up = st.ups(in);
      return st.fdb(concat<T>({up, skips[4 - stage_idx]}, 1));
    };

    for (std::size_t j = 0; j < shared_decoder.size(); ++j)
      z = run_stage(shared_decoder[j], z, j);

    std::vector<Tensor<T>> outputs;
    for (const auto& br : branches) {
      Tensor<T> bz = z;
      for (std::size_t j = 0; j < br.stages.size(); ++j)
        bz = run_stage(br.stages[j], bz, 2 + j);
      outputs.push_back(softmax(br.head(bz), 1));
    }
    return outputs;
  }

  std::size_t parameter_count() const { return params.element_count(); }
};

// ADAM with bias correction; moment buffers are aligned with the parameter
// order of the registry. Parameters without an accumulated gradient are
// treated as having gradient zero.
template <class T>
struct AdamState {
  T lr = T(1e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  std::size_t step_count = 0;
  std::vector<std::vector<T>> m, v;

  void step(ParamRegistry<T>& params) {
    auto& ps = params.params();
    if (m.empty()) {
      m.resize(ps.size());
      v.resize(ps.size());
      for (std::size_t i = 0; i < ps.size(); ++i) {
        m[i].assign(ps[i].second.size(), T(0));
        v[i].assign(ps[i].second.size(), T(0));
      }
    }
    if (m.size() != ps.size()) throw ConfigError("AdamState does not match parameter set");
    ++step_count;
    const T bc1 = T(1) - std::pow(beta1, T(step_count));
    const T bc2 = T(1) - std::pow(beta2, T(step_count));
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto& t = ps[i].second;
      auto data = t.mutable_data();
      for (std::size_t j = 0; j < data.size(); ++j) {
        T g = t.grad_at(j);
        m[i][j] = beta1 * m[i][j] + (T(1) - beta1) * g;
        v[i][j] = beta2 * v[i][j] + (T(1) - beta2) * g * g;
        T mhat = m[i][j] / bc1;
        T vhat = v[i][j] / bc2;
        data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

inline Task parse_task(const std::string& s) {
  if (s == "dense20") return Task::Dense20;
  if (s == "lane13") return Task::Lane13;
  if (s == "category11") return Task::Category11;
  if (s == "edge-binary") return Task::EdgeBinary;
  if (s == "edge-multi") return Task::EdgeMulti;
  throw ConfigError("unknown task: " + s);
}

}  // namespace skyseg
