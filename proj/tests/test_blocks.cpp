#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "skyseg/blocks.hpp"

using namespace skyseg;

TEST_CASE("ParamRegistry rejects duplicate names and seeds deterministically") {
  ParamRegistry<float> reg(42);
  auto a = reg.he_uniform("w", {2, 3}, 3);
  CHECK_THROWS_AS(reg.he_uniform("w", {2, 3}, 3), ConfigError);
  auto b = reg.constant("b", {2}, 0.5f);
  CHECK(b.data()[0] == 0.5f);
  CHECK(reg.element_count() == 8);
  CHECK(reg.params().size() == 2);
  CHECK(a.requires_grad());

  ParamRegistry<float> reg2(42);
  auto a2 = reg2.he_uniform("w", {2, 3}, 3);
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.data()[i] == a2.data()[i]);

  ParamRegistry<float> reg3(43);
  auto a3 = reg3.he_uniform("w", {2, 3}, 3);
  bool same = true;
  for (std::size_t i = 0; i < 6; ++i) same = same && a.data()[i] == a3.data()[i];
  CHECK_FALSE(same);
}

TEST_CASE("FDB channel law and concatenation order") {
  ParamRegistry<double> reg(1);
  FDBUnit<double> fdb(reg, "fdb", 3, 4, 2);
  CHECK(fdb.out_channels() == 3 + 4 * 2);
  auto x = TensorD::uniform({1, 3, 8, 8}, 5, -1.0, 1.0);
  auto y = fdb(x);
  CHECK(y.dims() == Shape{1, 11, 8, 8});
  CHECK_THROWS_AS(fdb(TensorD::zeros({1, 4, 8, 8})), ShapeError);

  // leading channels carry the doubled input (residual add on the copy)
  for (std::size_t i = 0; i < 3 * 64; ++i)
    CHECK(y.data()[i] == doctest::Approx(2.0 * x.data()[i]));
}

TEST_CASE("decoder-style FDB emits only the new channels") {
  ParamRegistry<double> reg(2);
  FDBUnit<double> fdb(reg, "fdb", 5, 3, 2, /*include_input=*/false);
  CHECK(fdb.out_channels() == 6);
  auto y = fdb(TensorD::uniform({1, 5, 4, 4}, 9));
  CHECK(y.dims() == Shape{1, 6, 4, 4});
}

TEST_CASE("FRSR main and tap dimensions") {
  ParamRegistry<double> reg(3);
  FRSRUnit<double> frsr(reg, "frsr", 5, 4, /*first=*/true);
  auto r = frsr.forward(TensorD::uniform({1, 5, 8, 8}, 11));
  CHECK(r.main.dims() == Shape{1, 4, 8, 8});
  CHECK(r.tap.dims() == Shape{1, 8, 4, 4});

  FRSRUnit<double> later(reg, "frsr2", 6, 4, /*first=*/false);
  CHECK(later.input_conv.weight.dims() == Shape{4, 6, 1, 1});
  auto r2 = later.forward(TensorD::uniform({1, 6, 8, 8}, 12));
  CHECK(r2.main.dims() == Shape{1, 4, 8, 8});
}

TEST_CASE("CRASPP builds a branch per rate forward then reversed") {
  ParamRegistry<double> reg(4);
  CRASPPUnit<double> cr(reg, "cr", 5, {1, 6, 12}, 4, 7);
  CHECK(cr.branches.size() == 6);
  CHECK(cr.rates == std::vector<std::size_t>{1, 6, 12, 12, 6, 1});
  CHECK(cr.branches[0].dilation == 1);
  CHECK(cr.branches[2].dilation == 12);
  CHECK(cr.branches[5].dilation == 1);
  CHECK(cr.fuse.weight.dims() == Shape{7, 24, 1, 1});
  auto y = cr(TensorD::uniform({1, 5, 16, 16}, 13));
  CHECK(y.dims() == Shape{1, 7, 16, 16});
}

TEST_CASE("LKBR maps any input width to 21 channels at full resolution") {
  ParamRegistry<double> reg(5);
  LKBRUnit<double> lk(reg, "lk", 9, 7);
  CHECK(lk.a1.weight.dims() == Shape{21, 9, 7, 1});
  CHECK(lk.a2.weight.dims() == Shape{21, 21, 1, 7});
  auto y = lk(TensorD::uniform({1, 9, 8, 8}, 14));
  CHECK(y.dims() == Shape{1, 21, 8, 8});
}

TEST_CASE("DoS halves resolution and UpS doubles it") {
  ParamRegistry<double> reg(6);
  DoSUnit<double> dos(reg, "dos", 4, 6, 3);
  auto y = dos(TensorD::uniform({1, 6, 8, 8}, 15));
  CHECK(y.dims() == Shape{1, 4, 4, 4});

  UpSUnit<double> ups(reg, "ups", 3, 4);
  auto z = ups(y);
  CHECK(z.dims() == Shape{1, 3, 8, 8});
}

TEST_CASE("SL unit emits growth channels at input resolution") {
  ParamRegistry<double> reg(7);
  SLUnit<double> sl(reg, "sl", 5, 2);
  auto y = sl(TensorD::uniform({1, 5, 6, 6}, 16));
  CHECK(y.dims() == Shape{1, 2, 6, 6});
}

TEST_CASE("reseed_offset decouples parameter draws from earlier counts") {
  ParamRegistry<float> a(9), b(9);
  a.he_uniform("x", {100}, 10);  // extra draw before the jump
  a.reseed_offset(500);
  b.reseed_offset(500);
  auto ta = a.he_uniform("y", {8}, 4);
  auto tb = b.he_uniform("y", {8}, 4);
  for (std::size_t i = 0; i < 8; ++i) CHECK(ta.data()[i] == tb.data()[i]);
}
