#pragma once

// Self-check suites runnable from the CLI: finite-difference gradient
// checks, scalar-loop loss oracles, brute-force metric oracles, and
// tile/stitch round trips. Each suite reports its worst observed error.

#include <functional>
#include <string>
#include <vector>

#include "skyseg/tensor.hpp"

namespace skyseg {

struct SuiteResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  std::string detail;
};

SuiteResult verify_gradcheck();
SuiteResult verify_loss_oracle();
SuiteResult verify_metric_oracle();
SuiteResult verify_tile_roundtrip();

SuiteResult run_suite(const std::string& name);
std::vector<std::string> suite_names();

// Central finite-difference check of a scalar function of one f64 tensor:
// returns the max relative error (with absolute floor) over all elements,
// or over a deterministic sample of `max_coords` elements when positive.
double gradcheck_max_rel_err(const std::function<TensorD(const TensorD&)>& f,
                             TensorD& x, double h = 1e-5, double floor = 1e-9,
                             std::size_t max_coords = 0);

// Variant for deep compositions where no single step size works everywhere:
// large steps cross ReLU/maxpool kinks, small steps drown weakly coupled
// coordinates in rounding noise. Per coordinate the best agreement over the
// given steps counts; a wrong analytic gradient disagrees at every step.
double gradcheck_max_rel_err(const std::function<TensorD(const TensorD&)>& f,
                             TensorD& x, const std::vector<double>& hs,
                             double floor, std::size_t max_coords);

}  // namespace skyseg
