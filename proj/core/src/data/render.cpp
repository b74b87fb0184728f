#include "mvhmr/data/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvhmr::data {

namespace {

// Blob contributions beyond this radius are below one quantization step.
constexpr double kBlobRadius = 4.0 * kBlobSigma;
constexpr double kBoneHalfWidth = 1.0;

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double s = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::hypot(px - (ax + s * dx), py - (ay + s * dy));
}

}  // namespace

Image render_view(const body::Joints& joints_cam, const std::array<int, body::kJoints>& parents,
                  const camera::Intrinsics& K, std::size_t channels) {
  if (channels == 0 || channels > kRenderChannels) throw std::invalid_argument("render_view: channels must be 1..3");
  const camera::MatX2 uv = camera::project_camera_frame(joints_cam, K);
  const auto H = static_cast<std::size_t>(K.height);
  const auto W = static_cast<std::size_t>(K.width);
  std::vector<double> plane(H * W * kRenderChannels, 0.0);
  auto px = [&](std::size_t y, std::size_t x, std::size_t c) -> double& { return plane[(y * W + x) * kRenderChannels + c]; };

  const double root_z = joints_cam(0, 2);
  for (Eigen::Index j = 0; j < joints_cam.rows(); ++j) {
    const double u = uv(j, 0), v = uv(j, 1), z = joints_cam(j, 2);
    const double dim = std::min(1.0, 2.5 / z);
    const double code = std::clamp(0.5 - (z - root_z) / 1.2, 0.05, 1.0);
    const long x0 = std::max(0L, static_cast<long>(std::floor(u - kBlobRadius)));
    const long x1 = std::min(static_cast<long>(W) - 1, static_cast<long>(std::ceil(u + kBlobRadius)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(v - kBlobRadius)));
    const long y1 = std::min(static_cast<long>(H) - 1, static_cast<long>(std::ceil(v + kBlobRadius)));
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const double d2 = (x - u) * (x - u) + (y - v) * (y - v);
        const double g = std::exp(-d2 / (2 * kBlobSigma * kBlobSigma));
        auto& c0 = px(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0);
        auto& c2 = px(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 2);
        c0 = std::max(c0, dim * g);
        c2 = std::max(c2, code * g);
      }
    }
  }
  for (std::size_t j = 1; j < body::kJoints; ++j) {
    const auto p = static_cast<Eigen::Index>(parents[j]);
    const auto jj = static_cast<Eigen::Index>(j);
    const double ax = uv(p, 0), ay = uv(p, 1), bx = uv(jj, 0), by = uv(jj, 1);
    const long x0 = std::max(0L, static_cast<long>(std::floor(std::min(ax, bx) - kBoneHalfWidth)));
    const long x1 = std::min(static_cast<long>(W) - 1, static_cast<long>(std::ceil(std::max(ax, bx) + kBoneHalfWidth)));
    const long y0 = std::max(0L, static_cast<long>(std::floor(std::min(ay, by) - kBoneHalfWidth)));
    const long y1 = std::min(static_cast<long>(H) - 1, static_cast<long>(std::ceil(std::max(ay, by) + kBoneHalfWidth)));
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const double d = segment_distance(static_cast<double>(x), static_cast<double>(y), ax, ay, bx, by);
        auto& c1 = px(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 1);
        c1 = std::max(c1, 1.0 - d / kBoneHalfWidth);
      }
    }
  }

  Image img{H, W, channels, std::vector<std::uint8_t>(H * W * channels)};
  for (std::size_t i = 0; i < H * W; ++i) {
    for (std::size_t c = 0; c < channels; ++c) img.pixels[i * channels + c] = quantize(plane[i * kRenderChannels + c]);
  }
  return img;
}

Image perturb_crop(const Image& image, double dx, double dy, double scale) {
  if (!(scale >= 0.5 && scale <= 2.0)) throw std::invalid_argument("perturb_crop: scale must lie in [0.5, 2]");
  const std::size_t H = image.height, W = image.width, C = image.channels;
  const double cx = 0.5 * static_cast<double>(W - 1);
  const double cy = 0.5 * static_cast<double>(H - 1);
  Image out{H, W, C, std::vector<std::uint8_t>(image.pixels.size(), 0)};
  auto sample = [&](long y, long x, std::size_t c) -> double {
    if (x < 0 || y < 0 || x >= static_cast<long>(W) || y >= static_cast<long>(H)) return 0.0;
    return image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
  };
  for (std::size_t y = 0; y < H; ++y) {
    const double sy = cy + dy + scale * (static_cast<double>(y) - cy);
    const double fy = std::floor(sy);
    const double wy = sy - fy;
    for (std::size_t x = 0; x < W; ++x) {
      const double sx = cx + dx + scale * (static_cast<double>(x) - cx);
      const double fx = std::floor(sx);
      const double wx = sx - fx;
      const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
      for (std::size_t c = 0; c < C; ++c) {
        const double v = (1 - wy) * ((1 - wx) * sample(iy, ix, c) + wx * sample(iy, ix + 1, c)) +
                         wy * ((1 - wx) * sample(iy + 1, ix, c) + wx * sample(iy + 1, ix + 1, c));
        out.pixels[(y * W + x) * C + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace mvhmr::data
