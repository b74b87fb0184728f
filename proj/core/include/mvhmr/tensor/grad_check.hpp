#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvhmr/tensor/tensor.hpp"

namespace mvhmr {

using TensorFn = std::function<Tensor(std::span<const Tensor>)>;

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  // Probe at most this many coordinates per input, chosen by `seed`; 0 probes all.
  std::size_t max_probes = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double tol = 0.0;
  bool passed = true;
  std::size_t probes = 0;
  // Location of the worst coordinate.
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares the analytic gradient of the scalar f(inputs) against central
// differences. The analytic pass runs in the inputs' own dtype; the numeric
// reference always evaluates f on 64-bit copies, so `f` must build any
// constants it needs in the dtype of its arguments.
//
// Relative error per coordinate is |a - n| / max(|a|, |n|, floor) where
// floor = 1e-3 * max|n| over the probed coordinates of that input (and at
// least 1e-12), raised to 1e5 * eps * |f| / step where the finite differences
// themselves lose resolution. Entries below the floor are judged in absolute
// terms.
GradCheckReport grad_check(const TensorFn& f, std::span<const Tensor> inputs,
                           const GradCheckOptions& options = {});

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double step, double tol);

}  // namespace mvhmr
