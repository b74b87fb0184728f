#include "mvhmr/train/batch.hpp"

#include <stdexcept>

namespace mvhmr::train {

Batch make_batch(const data::Dataset& ds, std::span<const std::size_t> samples,
                 std::span<const std::size_t> view_ids, Dtype dtype, const ImageHook& hook) {
  if (samples.empty() || view_ids.empty()) throw std::invalid_argument("make_batch: empty batch");
  const std::size_t B = samples.size(), N = view_ids.size();
  const auto& cfg = ds.config();
  const std::size_t H = cfg.image_size, W = cfg.image_size, C = cfg.channels;
  const camera::Intrinsics K = cfg.intrinsics();
  for (auto v : view_ids) {
    if (v >= ds.views()) throw std::out_of_range("make_batch: view id beyond the stored views");
  }

  std::vector<float> images(B * N * H * W * C);
  std::vector<double> theta, beta, j3d, j2d;
  theta.reserve(B * 69);
  beta.reserve(B * 10);
  j3d.reserve(B * N * 72);
  j2d.reserve(B * N * 48);
  for (std::size_t b = 0; b < B; ++b) {
    const data::MultiViewSample s = ds.sample(samples[b]);
    for (Eigen::Index j = 0; j < s.theta_b.rows(); ++j)
      for (int a = 0; a < 3; ++a) theta.push_back(s.theta_b(j, a));
    for (Eigen::Index k = 0; k < s.beta.size(); ++k) beta.push_back(s.beta(k));
    for (std::size_t n = 0; n < N; ++n) {
      const data::ViewRecord& v = s.views[view_ids[n]];
      const data::Image img = hook ? hook(v.image, samples[b], view_ids[n]) : v.image;
      float* dst = images.data() + (b * N + n) * H * W * C;
      for (std::size_t i = 0; i < H * W * C; ++i) dst[i] = static_cast<float>(img.pixels[i]) / 255.0f;
      for (Eigen::Index j = 0; j < v.j3d_cam.rows(); ++j)
        for (int a = 0; a < 3; ++a) j3d.push_back(v.j3d_cam(j, a));
      const camera::MatX2 uvn = camera::normalize_pixels(camera::MatX2(v.j2d), K);
      for (Eigen::Index j = 0; j < uvn.rows(); ++j)
        for (int a = 0; a < 2; ++a) j2d.push_back(uvn(j, a));
    }
  }
  Batch out;
  out.views = N;
  out.images = Tensor::from_floats({B, N, H, W, C}, images, dtype);
  out.gt_theta = Tensor::from_vector({B, 23, 3}, theta, dtype);
  out.gt_beta = Tensor::from_vector({B, 10}, beta, dtype);
  out.j3d = Tensor::from_vector({B, N, 24, 3}, j3d, dtype);
  out.j2d = Tensor::from_vector({B, N, 24, 2}, j2d, dtype);
  return out;
}

}  // namespace mvhmr::train
