#include "mvhmr/tensor/graph.hpp"

#include <stdexcept>
#include <unordered_map>

namespace mvhmr {

void Graph::validate() const {
  std::unordered_map<const detail::TensorImpl*, std::size_t> seen;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& rec = nodes[i];
    for (auto in : rec.inputs) {
      if (in >= i) {
        throw std::logic_error("graph: node " + std::to_string(i) + " (" + rec.op +
                               ") consumes node " + std::to_string(in) + " which does not precede it");
      }
    }
    if (!seen.emplace(&rec.output.impl(), i).second) {
      throw std::logic_error("graph: tensor recorded twice at node " + std::to_string(i));
    }
  }
}

Graph trace(const Tensor& root) {
  Graph g;
  if (!root.defined()) return g;
  using ImplPtr = std::shared_ptr<detail::TensorImpl>;
  std::unordered_map<const detail::TensorImpl*, std::size_t> index;
  struct Frame {
    ImplPtr impl;
    std::size_t next_input;
  };
  std::vector<Frame> stack{{root.impl_ptr(), 0}};
  std::unordered_map<const detail::TensorImpl*, bool> on_stack{{root.impl_ptr().get(), true}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = f.impl->grad_fn;
    if (node && f.next_input < node->inputs.size()) {
      const ImplPtr& in = node->inputs[f.next_input++];
      if (index.count(in.get())) continue;
      if (on_stack[in.get()]) throw std::logic_error("graph: cycle detected");
      on_stack[in.get()] = true;
      stack.push_back({in, 0});
      continue;
    }
    GraphRecord rec;
    rec.op = node ? std::string(node->op) : "leaf";
    if (node) {
      for (const auto& in : node->inputs) rec.inputs.push_back(index.at(in.get()));
    }
    rec.output = Tensor(f.impl);
    on_stack[f.impl.get()] = false;
    index.emplace(f.impl.get(), g.nodes.size());
    g.nodes.push_back(std::move(rec));
    stack.pop_back();
  }
  return g;
}

}  // namespace mvhmr
