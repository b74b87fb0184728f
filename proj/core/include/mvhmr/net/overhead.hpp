#pragma once

#include "mvhmr/net/network.hpp"

namespace mvhmr::net {

struct OverheadCounts {
  std::size_t backbone_params = 0;
  std::size_t head_params = 0;
  std::size_t backbone_macs = 0;
  std::size_t head_macs = 0;
};

// Exact parameter counts and analytic multiply-adds for one sample of N views.
// MACs cover convolutions, linear layers and the two attention products;
// normalizations, activations and softmax are not counted.
OverheadCounts count_params_and_macs(Network& model, std::size_t views);

}  // namespace mvhmr::net
