#include "skyseg/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "skyseg/blocks.hpp"
#include "skyseg/errors.hpp"
#include "skyseg/layers.hpp"
#include "skyseg/losses.hpp"
#include "skyseg/metrics.hpp"
#include "skyseg/network.hpp"
#include "skyseg/tiling.hpp"

namespace skyseg {

double gradcheck_max_rel_err(const std::function<TensorD(const TensorD&)>& f,
                             TensorD& x, const std::vector<double>& hs,
                             double floor, std::size_t max_coords) {
  if (hs.empty()) throw ConfigError("gradcheck: no step sizes given");
  x.set_requires_grad(true);
  x.zero_grad();  // earlier passes may have accumulated into this tensor
  TensorD y = f(x);
  if (y.rank() != 0) throw ShapeError("gradcheck: function must return a scalar");
  y.backward();
  std::vector<double> analytic(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) analytic[i] = x.grad_at(i);
  x.zero_grad();

  std::vector<std::size_t> coords;
  if (max_coords == 0 || max_coords >= x.size()) {
    coords.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) coords[i] = i;
  } else {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    for (std::size_t i = 0; i < max_coords; ++i) coords.push_back(pick(rng));
  }

  auto data = x.mutable_data();
  double worst = 0.0;
  for (std::size_t i : coords) {
    double orig = data[i];
    double best = std::numeric_limits<double>::infinity();
    for (double h : hs) {
      data[i] = orig + h;
      double fp = f(x).item();
      data[i] = orig - h;
      double fm = f(x).item();
      data[i] = orig;
      x.zero_grad();
      double numeric = (fp - fm) / (2 * h);
      double denom = std::max(floor, std::max(std::abs(numeric), std::abs(analytic[i])));
      best = std::min(best, std::abs(numeric - analytic[i]) / denom);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

double gradcheck_max_rel_err(const std::function<TensorD(const TensorD&)>& f,
                             TensorD& x, double h, double floor,
                             std::size_t max_coords) {
  return gradcheck_max_rel_err(f, x, std::vector<double>{h}, floor, max_coords);
}

namespace {

// weighted sum with fixed pseudo-random coefficients, so the scalar
// objective is sensitive to every output element
TensorD probe(const TensorD& t, std::uint64_t seed = 99) {
  TensorD c = TensorD::uniform(t.dims(), seed, 0.1, 1.0);
  return sum(mul(t, c));
}

struct Check {
  std::string name;
  double err;
  double tol;
};

SuiteResult finish(const std::string& suite, std::vector<Check> checks) {
  SuiteResult r;
  r.name = suite;
  r.passed = true;
  std::ostringstream os;
  for (const auto& c : checks) {
    bool ok = c.err < c.tol;
    r.passed = r.passed && ok;
    r.max_error = std::max(r.max_error, c.err);
    os << "  " << c.name << ": max err " << c.err << " (tol " << c.tol << ") "
       << (ok ? "ok" : "FAIL") << "\n";
  }
  r.detail = os.str();
  return r;
}

}  // namespace

SuiteResult verify_gradcheck() {
  std::vector<Check> checks;
  constexpr double kOpTol = 1e-6;

  // elementwise / reduction / shape op chains
  {
    TensorD x = TensorD::uniform({3, 4}, 1, 0.2, 2.0);
    checks.push_back({"sum(x*x)", gradcheck_max_rel_err(
        [](const TensorD& t) { return sum(mul(t, t)); }, x), kOpTol});
    checks.push_back({"mean(x-1)", gradcheck_max_rel_err(
        [](const TensorD& t) { return mean(sub(t, TensorD::scalar(1.0))); }, x), kOpTol});
    checks.push_back({"probe(log(exp(x)))", gradcheck_max_rel_err(
        [](const TensorD& t) { return probe(log(exp(t))); }, x), kOpTol});
    checks.push_back({"probe(softmax(x))", gradcheck_max_rel_err(
        [](const TensorD& t) { return probe(softmax(t, 1)); }, x), kOpTol});
    checks.push_back({"probe(concat/slice/pad)", gradcheck_max_rel_err(
        [](const TensorD& t) {
          TensorD c = concat<double>({t, scalar_mul(t, 2.0)}, 0);
          TensorD s = slice(c, {1, 0}, {4, 4});
          return probe(pad_zero(s, {{1, 0}, {0, 2}}));
        }, x), kOpTol});
    checks.push_back({"probe(max axis0)", gradcheck_max_rel_err(
        [](const TensorD& t) { return probe(max(t, {0})); }, x), kOpTol});
  }

  // layers
  {
    TensorD x = TensorD::uniform({1, 2, 6, 6}, 2, -1.0, 1.0);
    TensorD w = TensorD::uniform({3, 2, 3, 3}, 3, -0.5, 0.5);
    TensorD b = TensorD::uniform({3}, 4, -0.2, 0.2);
    auto cv = [&](const TensorD&) { return probe(conv2d(x, w, b, 1, 1)); };
    checks.push_back({"conv2d wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(conv2d(t, w, b)); }, x), kOpTol});
    checks.push_back({"conv2d wrt w", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(conv2d(x, t, b)); }, w), kOpTol});
    checks.push_back({"conv2d wrt b", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(conv2d(x, w, t)); }, b), kOpTol});
    checks.push_back({"conv2d stride2 wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(conv2d(t, w, b, 2)); }, x), kOpTol});
    checks.push_back({"conv2d dilation2 wrt w", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(conv2d(x, t, b, 1, 2)); }, w), kOpTol});
    (void)cv;

    TensorD dw = TensorD::uniform({2, 1, 3, 3}, 5, -0.5, 0.5);
    TensorD pw = TensorD::uniform({3, 2, 1, 1}, 6, -0.5, 0.5);
    checks.push_back({"separable wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(separable_conv2d(t, dw, pw, b)); }, x), kOpTol});
    checks.push_back({"separable wrt depthwise", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(separable_conv2d(x, t, pw, b)); }, dw), kOpTol});

    checks.push_back({"maxpool2 wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(maxpool2(t)); }, x), kOpTol});
    checks.push_back({"upsample_nn2 wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(upsample_nn2(t)); }, x), kOpTol});

    TensorD gamma = TensorD::uniform({2}, 7, 0.5, 1.5);
    TensorD beta = TensorD::uniform({2}, 8, -0.5, 0.5);
    checks.push_back({"batchnorm wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(batchnorm(t, gamma, beta)); }, x), kOpTol});
    checks.push_back({"batchnorm wrt gamma", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(batchnorm(x, t, beta)); }, gamma), kOpTol});
  }

  // losses
  {
    std::mt19937_64 rng(42);
    std::size_t C = 3, N = 8;
    std::vector<double> logits(C * N), onehot(C * N, 0.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : logits) v = u(rng);
    for (std::size_t n = 0; n < N; ++n) onehot[(rng() % C) * N + n] = 1.0;
    TensorD z = TensorD::from_data({1, C, N}, logits);
    TensorD y = TensorD::from_data({1, C, N}, onehot);
    checks.push_back({"cross_entropy grad", gradcheck_max_rel_err(
        [&](const TensorD& t) { return cross_entropy(softmax(t, 1), y); }, z), kOpTol});
    checks.push_back({"soft_iou grad", gradcheck_max_rel_err(
        [&](const TensorD& t) { return soft_iou_loss(softmax(t, 1), y); }, z), kOpTol});
    checks.push_back({"soft_dice grad", gradcheck_max_rel_err(
        [&](const TensorD& t) { return soft_dice_loss(softmax(t, 1), y); }, z), kOpTol});
  }

  // blocks, each wrt input and one parameter
  {
    ParamRegistry<double> reg(17);
    FDBUnit<double> fdb(reg, "fdb", 3, 2, 2);
    FRSRUnit<double> frsr(reg, "frsr", 4, 2, true);
    CRASPPUnit<double> craspp(reg, "craspp", 3, {1, 2}, 3, 4);
    LKBRUnit<double> lkbr(reg, "lkbr", 3, 3);
    DoSUnit<double> dos(reg, "dos", 2, 3, 3);
    UpSUnit<double> ups(reg, "ups", 2, 3);

    TensorD x3 = TensorD::uniform({1, 3, 4, 4}, 21, -1.0, 1.0);
    TensorD x4 = TensorD::uniform({1, 4, 4, 4}, 22, -1.0, 1.0);
    checks.push_back({"fdb wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(fdb(t)); }, x3), kOpTol});
    checks.push_back({"frsr wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(frsr(t)); }, x4), kOpTol});
    checks.push_back({"craspp wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(craspp(t)); }, x3), kOpTol});
    checks.push_back({"lkbr wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(lkbr(t)); }, x3), kOpTol});
    checks.push_back({"dos wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(dos(t)); }, x3), kOpTol});
    checks.push_back({"ups wrt x", gradcheck_max_rel_err(
        [&](const TensorD& t) { return probe(ups(t)); }, x3), kOpTol});

    auto& params = reg.params();
    auto param_check = [&](const std::string& name, auto forward) {
      for (auto& [pname, p] : params) {
        if (pname != name) continue;
        auto wrapped = [&](const TensorD&) { return forward(); };
        checks.push_back({"block wrt " + name,
                          gradcheck_max_rel_err(wrapped, p, 1e-5, 1e-9, 6), kOpTol});
        reg.zero_grads();
        return;
      }
      throw ConfigError("gradcheck: no parameter named " + name);
    };
    param_check("fdb.sl0.sep.pointwise", [&] { return probe(fdb(x3)); });
    param_check("frsr.pool_conv.weight", [&] { return probe(frsr(x4)); });
    param_check("craspp.branch1.weight", [&] { return probe(craspp(x3)); });
    param_check("lkbr.a1.weight", [&] { return probe(lkbr(x3)); });
  }

  // end-to-end micro network: sl_counts all 1, growth 2, 32x32 input
  {
    NetworkConfig nc;
    nc.task = Task::Dense20;
    nc.sl_counts.assign(11, 1);
    nc.growth = 2;
    nc.stem_channels = 4;
    nc.craspp_rates = {1, 2};
    nc.craspp_width = 4;
    nc.lkbr_k = 3;
    nc.seed = 5;
    auto net = Network<double>::build(nc);
    const auto specs = nc.branch_specs();

    TensorD img = TensorD::uniform({1, 3, 32, 32}, 30, 0.0, 1.0);
    std::vector<TensorD> targets;
    std::mt19937_64 rng(31);
    for (const auto& s : specs) {
      std::vector<double> y(s.classes * 32 * 32, 0.0);
      for (std::size_t p = 0; p < 32 * 32; ++p) y[(rng() % s.classes) * 32 * 32 + p] = 1.0;
      targets.push_back(TensorD::from_data({1, s.classes, 32, 32}, std::move(y)));
    }
    LossConfig<double> lc;
    auto objective = [&] {
      auto outputs = net.forward(img);
      return total_loss(lc, outputs, targets, 0);
    };

    const std::vector<double> hs = {1e-4, 1e-5, 1e-6};
    double worst = gradcheck_max_rel_err(
        [&](const TensorD&) { return objective(); }, img, hs, 1e-9, 6);
    net.params.zero_grads();
    const char* names[] = {"stem.weight", "enc2.fdb.sl0.sep.pointwise",
                           "mid.craspp.fuse.weight", "dec0.fdb.sl0.sep.pointwise",
                           "edge_binary.head.weight"};
    for (const char* name : names) {
      for (auto& [pname, p] : net.params.params()) {
        if (pname != name) continue;
        worst = std::max(worst, gradcheck_max_rel_err(
            [&](const TensorD&) { return objective(); }, p, hs, 1e-9, 4));
        net.params.zero_grads();
      }
    }
    checks.push_back({"end-to-end micro network", worst, 1e-5});
  }

  return finish("gradcheck", std::move(checks));
}

SuiteResult verify_loss_oracle() {
  std::vector<Check> checks;
  std::mt19937_64 rng(2024);
  double worst_ce = 0, worst_iou = 0, worst_dice = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t C = 1 + rng() % 5, N = 1 + rng() % 64;
    std::vector<double> p(C * N), y(C * N, 0.0);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (std::size_t n = 0; n < N; ++n) {
      double z = 0;
      for (std::size_t c = 0; c < C; ++c) {
        p[c * N + n] = u(rng);
        z += p[c * N + n];
      }
      for (std::size_t c = 0; c < C; ++c) p[c * N + n] /= z;
      y[(rng() % C) * N + n] = 1.0;
    }
    TensorD pt = TensorD::from_data({1, C, N}, p);
    TensorD yt = TensorD::from_data({1, C, N}, y);

    // scalar-loop oracles
    double ce = 0;
    for (std::size_t i = 0; i < C * N; ++i)
      if (y[i] != 0) ce -= std::log(p[i]);
    ce /= double(C);

    double iou = 0, dice = 0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < C; ++c) {
      double num = 0, uden = 0, sy2 = 0, sp2 = 0;
      bool any = false;
      for (std::size_t n = 0; n < N; ++n) {
        double yy = y[c * N + n], pp = p[c * N + n];
        num += yy * pp;
        uden += yy + pp - yy * pp;
        sy2 += yy * yy;
        sp2 += pp * pp;
        any = any || yy != 0;
      }
      if (!any) continue;
      ++present;
      iou -= num / uden;
      dice -= 2 * std::abs(num) / (sy2 + sp2);
    }
    if (present) {
      iou /= double(present);
      dice /= double(present);
    }

    worst_ce = std::max(worst_ce, std::abs(cross_entropy(pt, yt).item() - ce));
    worst_iou = std::max(worst_iou, std::abs(soft_iou_loss(pt, yt).item() - iou));
    worst_dice = std::max(worst_dice, std::abs(soft_dice_loss(pt, yt).item() - dice));
  }
  checks.push_back({"cross_entropy vs oracle", worst_ce, 1e-6});
  checks.push_back({"soft_iou vs oracle", worst_iou, 1e-6});
  checks.push_back({"soft_dice vs oracle", worst_dice, 1e-6});

  // perfect prediction: every class present, probs equal to the one-hot
  {
    std::size_t C = 3, N = 6;
    std::vector<double> y(C * N, 0.0);
    for (std::size_t n = 0; n < N; ++n) y[(n % C) * N + n] = 1.0;
    TensorD yt = TensorD::from_data({1, C, N}, y);
    checks.push_back({"perfect ce == 0",
                      std::abs(cross_entropy(yt, yt).item()), 1e-9});
    checks.push_back({"perfect soft_iou == -1",
                      std::abs(soft_iou_loss(yt, yt).item() + 1.0), 1e-9});
    checks.push_back({"perfect soft_dice == -1",
                      std::abs(soft_dice_loss(yt, yt).item() + 1.0), 1e-9});
  }
  return finish("loss-oracle", std::move(checks));
}

SuiteResult verify_metric_oracle() {
  std::vector<Check> checks;
  std::mt19937_64 rng(7);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t C = 2 + rng() % 5, N = 50 + rng() % 200;
    std::vector<std::uint8_t> gt(N), pred(N);
    for (std::size_t i = 0; i < N; ++i) {
      gt[i] = std::uint8_t(rng() % C);
      pred[i] = std::uint8_t(rng() % C);
    }
    ConfusionMatrix cm(C);
    cm.accumulate(gt, pred);

    // brute-force counting oracle
    double miou = 0, fwiou = 0, mp = 0, mr = 0;
    std::size_t n_iou = 0, n_p = 0, n_r = 0, correct = 0;
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < N; ++i) {
        if (gt[i] == c && pred[i] == c) ++tp;
        if (gt[i] != c && pred[i] == c) ++fp;
        if (gt[i] == c && pred[i] != c) ++fn;
      }
      if (tp + fp + fn) {
        double v = double(tp) / double(tp + fp + fn);
        miou += v;
        ++n_iou;
        fwiou += double(tp + fn) / double(N) * v;
      }
      if (tp + fp) { mp += double(tp) / double(tp + fp); ++n_p; }
      if (tp + fn) { mr += double(tp) / double(tp + fn); ++n_r; }
    }
    for (std::size_t i = 0; i < N; ++i)
      if (gt[i] == pred[i]) ++correct;
    if (n_iou) miou /= double(n_iou);
    if (n_p) mp /= double(n_p);
    if (n_r) mr /= double(n_r);

    worst = std::max(worst, std::abs(cm.mean_iou() - miou));
    worst = std::max(worst, std::abs(cm.fw_iou() - fwiou));
    worst = std::max(worst, std::abs(cm.pixel_accuracy() - double(correct) / double(N)));
    worst = std::max(worst, std::abs(cm.mean_precision() - mp));
    worst = std::max(worst, std::abs(cm.mean_recall() - mr));
  }
  checks.push_back({"metrics vs brute force", worst, 1e-12});

  // hand case: TP=3, FP=1, FN=2 for class 1 -> IoU exactly 0.5
  {
    ConfusionMatrix cm(2);
    cm.add(1, 1, 3);
    cm.add(0, 1, 1);
    cm.add(1, 0, 2);
    checks.push_back({"hand case IoU 0.5", std::abs(*cm.iou(1) - 0.5), 0.0 + 1e-15});
  }
  return finish("metric-oracle", std::move(checks));
}

SuiteResult verify_tile_roundtrip() {
  std::vector<Check> checks;

  // 1024x1024, S=512, overlap 0.5 -> 3x3 grid
  auto grid = TileGrid::make(1024, 1024, 512, 0.5);
  checks.push_back({"tile count 9", grid.count() == 9 ? 0.0 : 1.0, 0.5});

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::size_t C = 2;
  std::vector<float> map(C * 1024 * 1024);
  for (auto& v : map) v = u(rng);
  std::vector<std::vector<float>> tiles;
  for (std::size_t t = 0; t < grid.count(); ++t)
    tiles.push_back(extract_tile(grid, map, C, t));
  auto back = stitch(grid, tiles, C);
  double worst = 0;
  for (std::size_t i = 0; i < map.size(); ++i)
    worst = std::max(worst, double(std::abs(back[i] - map[i])));
  checks.push_back({"split/stitch overlap 0.5", worst, 1e-7});

  auto grid0 = TileGrid::make(256, 320, 64, 0.0);
  std::vector<float> map0(C * 256 * 320);
  for (auto& v : map0) v = u(rng);
  std::vector<std::vector<float>> tiles0;
  for (std::size_t t = 0; t < grid0.count(); ++t)
    tiles0.push_back(extract_tile(grid0, map0, C, t));
  auto back0 = stitch(grid0, tiles0, C);
  bool exact = back0 == map0;
  checks.push_back({"overlap-0 round trip bit-exact", exact ? 0.0 : 1.0, 0.5});

  return finish("tile-roundtrip", std::move(checks));
}

std::vector<std::string> suite_names() {
  return {"gradcheck", "loss-oracle", "metric-oracle", "tile-roundtrip"};
}

SuiteResult run_suite(const std::string& name) {
  if (name == "gradcheck") return verify_gradcheck();
  if (name == "loss-oracle") return verify_loss_oracle();
  if (name == "metric-oracle") return verify_metric_oracle();
  if (name == "tile-roundtrip") return verify_tile_roundtrip();
  throw ConfigError("unknown verify suite: " + name);
}

}  // namespace skyseg
