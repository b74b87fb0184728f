#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mvhmr/data/dataset.hpp"

namespace mvhmr::train {

struct Batch {
  Tensor images;    // [B, N, H, W, C], values in [0, 1]
  Tensor gt_theta;  // [B, 23, 3]
  Tensor gt_beta;   // [B, 10]
  Tensor j3d;       // [B, N, 24, 3] camera frame, metres
  Tensor j2d;       // [B, N, 24, 2] normalized to [-1, 1]
  std::size_t views = 0;
};

// Optional per-(sample, view) image transform applied before batching.
using ImageHook = std::function<data::Image(const data::Image&, std::size_t sample, std::size_t view)>;

// `view_ids[k]` picks stored view k of each sample into batch slot k.
Batch make_batch(const data::Dataset& ds, std::span<const std::size_t> samples,
                 std::span<const std::size_t> view_ids, Dtype dtype, const ImageHook& hook = {});

}  // namespace mvhmr::train
