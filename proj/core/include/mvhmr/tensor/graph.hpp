#pragma once

#include <string>
#include <vector>

#include "mvhmr/tensor/tensor.hpp"

namespace mvhmr {

/// Snapshot of the recorded computation reaching a tensor. Leaves appear as
/// records with op "leaf" and no inputs.
struct GraphRecord {
  std::string op;
  std::vector<std::size_t> inputs;  // indices into Graph::nodes, all < own index
  Tensor output;
};

struct Graph {
  std::vector<GraphRecord> nodes;

  // Checks acyclicity and that inputs precede consumers. Throws std::logic_error.
  void validate() const;
};

// Topologically ordered trace of every tensor that `root` depends on through
// recorded ops. Each tensor appears once.
Graph trace(const Tensor& root);

}  // namespace mvhmr
