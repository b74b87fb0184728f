#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mvhmr/camera/camera.hpp"

namespace mvhmr::data {

inline constexpr double kBlobSigma = 1.5;
inline constexpr std::size_t kRenderChannels = 3;

// Row-major H x W x C bytes.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

// Keypoint sprite rendering of camera-frame joints. Channel 0: Gaussian blobs
// dimmed with depth; 1: anti-aliased bones; 2: blobs coded by depth relative
// to the root (nearer is brighter). Only the first `channels` (<= 3) are
// emitted. Pixel (x, y) is centred on image coordinate (x, y). Throws
// camera::ProjectionError when a joint is not in front of the camera.
Image render_view(const body::Joints& joints_cam, const std::array<int, body::kJoints>& parents,
                  const camera::Intrinsics& K, std::size_t channels = kRenderChannels);

// Resamples `image` as if the crop window were shifted by (dx, dy) pixels and
// scaled by `scale` about the image centre: out(p) = in(c + d + scale (p - c)),
// bilinear, zero outside. Throws std::invalid_argument unless scale is in
// [0.5, 2].
Image perturb_crop(const Image& image, double dx, double dy, double scale);

}  // namespace mvhmr::data
