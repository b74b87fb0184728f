#include "mvhmr/train/adamw.hpp"

#include <cmath>

namespace mvhmr::train {

AdamW::AdamW(net::ParamList params, const AdamWOptions& options) : params_(std::move(params)), opt_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor->numel(), 0.0);
    v_.emplace_back(p.tensor->numel(), 0.0);
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = *params_[k].tensor;
    const Tensor g = p.grad();
    if (!g.defined()) continue;
    auto& m = m_[k];
    auto& v = v_[k];
    dispatch_dtype(p.dtype(), [&]<typename T>() {
      auto w = p.mutable_data<T>();
      const auto gd = g.data<T>();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = gd[i];
        m[i] = opt_.beta1 * m[i] + (1 - opt_.beta1) * gi;
        v[i] = opt_.beta2 * v[i] + (1 - opt_.beta2) * gi * gi;
        const double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opt_.eps) + opt_.weight_decay * w[i];
        w[i] = static_cast<T>(w[i] - opt_.lr * update);
      }
    });
  }
}

void AdamW::zero_grad() {
  for (const auto& p : params_) p.tensor->zero_grad();
}

}  // namespace mvhmr::train
