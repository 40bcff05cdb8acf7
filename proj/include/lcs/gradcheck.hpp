#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lcs/tape.hpp"
#include "lcs/tensor.hpp"

namespace lcs {

// One differentiable computation under test: given a tape and leaf inputs,
// build and return the output. Must be a pure function of the inputs (any
// internal randomness has to be re-seeded identically per call).
using CheckedOp =
    std::function<VarT<double>(TapeT<double>&, const std::vector<VarT<double>>&)>;

// Rejects sampled inputs the op is not cleanly differentiable at
// (e.g. near-ties for maxpool, near-zero for relu). Resampled until accepted.
using InputFilter = std::function<bool(const std::vector<VarT<double>>&)>;

struct GradCheckSpec {
  std::string name;
  CheckedOp op;
  std::vector<Shape> input_shapes;
  std::vector<bool> check_input;  // empty = check all
  InputFilter accept;             // optional
  double h = 1e-3;
  double input_scale = 1.0;
};

// Compares the tape gradient of a random-projection scalar of the output
// against central finite differences in double precision and returns the
// max relative error (|a - n| / max(|a|, |n|, 1e-3)).
double grad_check(const GradCheckSpec& spec, std::uint64_t seed);

struct SuiteEntry {
  std::string name;
  double max_err = 0.0;  // worst over seeds
  double tolerance = 1e-3;
  bool passed = false;
};

// Runs every engine primitive plus the composite loss across `seeds` seeds.
std::vector<SuiteEntry> gradient_suite(int seeds = 20);

}  // namespace lcs
