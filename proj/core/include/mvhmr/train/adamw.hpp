#pragma once

#include <vector>

#include "mvhmr/net/layers.hpp"

namespace mvhmr::train {

struct AdamWOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// Adam with decoupled weight decay. Holds pointers to the parameter handles,
// so the owning module must outlive the optimizer and must not be cast after
// construction.
class AdamW {
 public:
  AdamW(net::ParamList params, const AdamWOptions& options);

  // Parameters without a gradient are skipped (their moments still age).
  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }

 private:
  net::ParamList params_;
  AdamWOptions opt_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace mvhmr::train
