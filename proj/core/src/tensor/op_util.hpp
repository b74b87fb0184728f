#pragma once

#include <initializer_list>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mvhmr/tensor/tensor.hpp"

namespace mvhmr::detail {

using ImplPtr = std::shared_ptr<TensorImpl>;
using BackwardFn = std::function<void(const TensorImpl& out, const TensorImpl& grad_out)>;

std::size_t normalize_axis(std::string_view op, int axis, std::size_t rank);

void require_same_dtype(std::string_view op, const Tensor& a, const Tensor& b);

[[noreturn]] void shape_error(std::string_view op, const Shape& a, const Shape& b,
                              std::string_view detail = {});

// True when an op over `inputs` should be recorded for backward.
bool needs_grad(std::initializer_list<const Tensor*> inputs);
bool needs_grad(const std::vector<Tensor>& inputs);

// Attaches a graph node to `out` when any input requires grad.
Tensor finish(ImplPtr out, std::string_view op, std::vector<Tensor> inputs, BackwardFn backward);

template <typename T>
T* grad_data(TensorImpl& impl) {
  return grad_buffer(impl).values<T>().data();
}

template <typename T>
const T* cdata(const TensorImpl& impl) {
  return impl.values<T>().data();
}

template <typename T>
T* wdata(TensorImpl& impl) {
  return impl.values<T>().data();
}

// Row-major strides for `shape`.
std::vector<std::size_t> strides_of(const Shape& shape);

}  // namespace mvhmr::detail
