#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "skyseg/network.hpp"
#include "skyseg/weights_io.hpp"

using namespace skyseg;

namespace {

NetworkConfig micro(Task task) {
  NetworkConfig cfg;
  cfg.task = task;
  cfg.sl_counts.assign(11, 1);
  cfg.growth = 2;
  cfg.stem_channels = 4;
  cfg.craspp_rates = {1, 2};
  cfg.craspp_width = 4;
  cfg.lkbr_k = 3;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("output shapes and simplex property for every task") {
  auto img = TensorF::uniform({1, 3, 32, 32}, 3, 0.0f, 1.0f);
  struct Expect {
    Task task;
    std::vector<std::size_t> classes;
  };
  for (auto& e : std::vector<Expect>{{Task::Dense20, {20, 20, 2}},
                                     {Task::Lane13, {13, 2}},
                                     {Task::Category11, {11}},
                                     {Task::EdgeBinary, {2}},
                                     {Task::EdgeMulti, {20}}}) {
    auto net = Network<float>::build(micro(e.task));
    auto outs = net.forward(img);
    REQUIRE(outs.size() == e.classes.size());
    for (std::size_t b = 0; b < outs.size(); ++b) {
      CHECK(outs[b].dims() == Shape{1, e.classes[b], 32, 32});
      const std::size_t c = e.classes[b], hw = 32 * 32;
      for (std::size_t p = 0; p < hw; p += 97) {
        float s = 0;
        for (std::size_t k = 0; k < c; ++k) s += outs[b].data()[k * hw + p];
        CHECK(s == doctest::Approx(1.0f).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("forward rejects bad input shapes") {
  auto net = Network<float>::build(micro(Task::Category11));
  CHECK_THROWS_AS(net.forward(TensorF::zeros({1, 3, 30, 32})), ShapeError);
  CHECK_THROWS_AS(net.forward(TensorF::zeros({1, 1, 32, 32})), ShapeError);
  CHECK_THROWS_AS(net.forward(TensorF::zeros({3, 32, 32})), ShapeError);
}

TEST_CASE("same seed gives the same outputs, different seed differs") {
  auto img = TensorF::uniform({1, 3, 32, 32}, 5, 0.0f, 1.0f);
  auto a = Network<float>::build(micro(Task::Category11)).forward(img);
  auto b = Network<float>::build(micro(Task::Category11)).forward(img);
  for (std::size_t i = 0; i < a[0].size(); ++i) CHECK(a[0].data()[i] == b[0].data()[i]);

  auto cfg = micro(Task::Category11);
  cfg.seed = 18;
  auto c = Network<float>::build(cfg).forward(img);
  bool same = true;
  for (std::size_t i = 0; i < a[0].size(); ++i) same = same && a[0].data()[i] == c[0].data()[i];
  CHECK_FALSE(same);
}

TEST_CASE("branch parameters only affect their own output") {
  auto img = TensorF::uniform({1, 3, 32, 32}, 7, 0.0f, 1.0f);
  auto net = Network<float>::build(micro(Task::Dense20));
  auto base = net.forward(img);

  // perturb a tensor owned by the edge_binary branch
  bool found = false;
  for (auto& [name, t] : net.params.params())
    if (name.rfind("edge_binary.", 0) == 0 && t.size() > 0) {
      t.mutable_data()[0] += 0.5f;
      found = true;
      break;
    }
  REQUIRE(found);
  auto after = net.forward(img);

  bool semantic_same = true, edge_same = true;
  for (std::size_t i = 0; i < base[0].size(); ++i)
    semantic_same = semantic_same && base[0].data()[i] == after[0].data()[i];
  for (std::size_t i = 0; i < base[2].size(); ++i)
    edge_same = edge_same && base[2].data()[i] == after[2].data()[i];
  CHECK(semantic_same);
  CHECK_FALSE(edge_same);

  // perturbing the stem moves every branch
  net.stem.weight.mutable_data()[0] += 0.5f;
  auto moved = net.forward(img);
  bool all_same = true;
  for (std::size_t i = 0; i < base[0].size(); ++i)
    all_same = all_same && after[0].data()[i] == moved[0].data()[i];
  CHECK_FALSE(all_same);
}

TEST_CASE("weight save/load round trip is bit exact") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "skyseg_netio_test";
  fs::create_directories(dir);
  auto path = dir / "w.ssnw";

  auto net = Network<float>::build(micro(Task::Lane13));
  save_network(path, net);

  auto cfg = micro(Task::Lane13);
  cfg.seed = 99;  // different init, fully overwritten by the load
  auto net2 = Network<float>::build(cfg);
  load_network(path, net2);

  auto img = TensorF::uniform({1, 3, 32, 32}, 9, 0.0f, 1.0f);
  auto a = net.forward(img), b = net2.forward(img);
  for (std::size_t o = 0; o < a.size(); ++o)
    for (std::size_t i = 0; i < a[o].size(); ++i) CHECK(a[o].data()[i] == b[o].data()[i]);

  // shape mismatch is rejected
  auto tensors = load_weights(path);
  tensors[0].dims[0] += 1;
  CHECK_THROWS_AS(restore(net2.params, tensors), FormatError);

  fs::remove_all(dir);
}

TEST_CASE("weight file format errors are detected") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "skyseg_fmt_test";
  fs::create_directories(dir);
  auto bad = dir / "bad.ssnw";
  {
    std::FILE* f = std::fopen(bad.string().c_str(), "wb");
    std::fwrite("JUNK", 1, 4, f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_weights(bad), FormatError);
  CHECK_THROWS_AS(load_weights(dir / "missing.ssnw"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("parameter_count matches an independent tally") {
  auto net = Network<float>::build(micro(Task::Dense20));
  std::size_t tally = 0;
  for (const auto& nt : snapshot(net.params)) {
    std::size_t n = 1;
    for (auto d : nt.dims) n *= d;
    tally += n;
  }
  CHECK(net.parameter_count() == tally);
}

TEST_CASE("config validation rejects malformed settings") {
  auto cfg = micro(Task::Dense20);
  cfg.sl_counts.pop_back();
  CHECK_THROWS_AS(Network<float>::build(cfg), ConfigError);
  cfg = micro(Task::Dense20);
  cfg.growth = 0;
  CHECK_THROWS_AS(Network<float>::build(cfg), ConfigError);
  cfg = micro(Task::Dense20);
  cfg.lkbr_k = 4;
  CHECK_THROWS_AS(Network<float>::build(cfg), ConfigError);
  cfg = micro(Task::Dense20);
  cfg.craspp_rates.clear();
  CHECK_THROWS_AS(Network<float>::build(cfg), ConfigError);
}

TEST_CASE("adam moves parameters against the gradient") {
  ParamRegistry<double> reg(1);
  auto w = reg.he_uniform("w", {4}, 4);
  auto before = std::vector<double>(w.data().begin(), w.data().end());
  sum(mul(w, w)).backward();
  AdamState<double> adam;
  adam.lr = 0.01;
  adam.step(reg);
  for (std::size_t i = 0; i < 4; ++i) {
    double expect = before[i] - 0.01 * (before[i] > 0 ? 1.0 : (before[i] < 0 ? -1.0 : 0.0));
    CHECK(w.data()[i] == doctest::Approx(expect).epsilon(1e-3));
  }
}
