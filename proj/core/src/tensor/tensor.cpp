#include "mvhmr/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "op_util.hpp"

namespace mvhmr {

namespace {
thread_local bool t_grad_enabled = true;
}

std::string_view dtype_name(Dtype dtype) { return dtype == Dtype::f32 ? "f32" : "f64"; }

Dtype parse_dtype(std::string_view name) {
  if (name == "f32" || name == "float32") return Dtype::f32;
  if (name == "f64" || name == "float64") return Dtype::f64;
  throw std::invalid_argument("unknown dtype '" + std::string(name) + "' (expected f32 or f64)");
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

namespace detail {

std::shared_ptr<TensorImpl> make_impl(Shape shape, Dtype dtype) {
  auto impl = std::make_shared<TensorImpl>();
  const std::size_t n = shape_numel(shape);
  impl->shape = std::move(shape);
  impl->dtype = dtype;
  if (dtype == Dtype::f32) {
    impl->data = std::vector<float>(n, 0.0f);
  } else {
    impl->data = std::vector<double>(n, 0.0);
  }
  return impl;
}

TensorImpl& grad_buffer(TensorImpl& impl) {
  if (!impl.grad) impl.grad = make_impl(impl.shape, impl.dtype);
  return *impl.grad;
}

std::size_t normalize_axis(std::string_view op, int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

void require_same_dtype(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype()) {
    throw std::invalid_argument(std::string(op) + ": dtype mismatch " +
                                std::string(dtype_name(a.dtype())) + " vs " +
                                std::string(dtype_name(b.dtype())));
  }
}

void shape_error(std::string_view op, const Shape& a, const Shape& b, std::string_view detail) {
  std::string msg = std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                    shape_str(b);
  if (!detail.empty()) {
    msg += " (";
    msg += detail;
    msg += ')';
  }
  throw ShapeError(msg);
}

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (!t_grad_enabled) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

bool needs_grad(const std::vector<Tensor>& inputs) {
  if (!t_grad_enabled) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor& t) { return t.requires_grad(); });
}

Tensor finish(ImplPtr out, std::string_view op, std::vector<Tensor> inputs, BackwardFn backward) {
  if (needs_grad(inputs)) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.impl_ptr());
    node->backward = std::move(backward);
    out->grad_fn = std::move(node);
    out->requires_grad = true;
  }
  return Tensor(std::move(out));
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, Dtype dtype) {
  return Tensor(detail::make_impl(std::move(shape), dtype));
}

Tensor Tensor::ones(Shape shape, Dtype dtype) { return full(std::move(shape), 1.0, dtype); }

Tensor Tensor::full(Shape shape, double value, Dtype dtype) {
  auto impl = detail::make_impl(std::move(shape), dtype);
  dispatch_dtype(dtype, [&]<typename T>() {
    auto& v = impl->values<T>();
    std::fill(v.begin(), v.end(), static_cast<T>(value));
  });
  return Tensor(std::move(impl));
}

Tensor Tensor::from_vector(Shape shape, std::span<const double> values, Dtype dtype) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("from_vector: " + std::to_string(values.size()) +
                     " values do not fill shape " + shape_str(shape));
  }
  auto impl = detail::make_impl(std::move(shape), dtype);
  dispatch_dtype(dtype, [&]<typename T>() {
    auto& v = impl->values<T>();
    std::transform(values.begin(), values.end(), v.begin(),
                   [](double x) { return static_cast<T>(x); });
  });
  return Tensor(std::move(impl));
}

Tensor Tensor::from_vector(Shape shape, std::initializer_list<double> values, Dtype dtype) {
  return from_vector(std::move(shape), std::span<const double>(values.begin(), values.size()),
                     dtype);
}

Tensor Tensor::from_floats(Shape shape, std::span<const float> values, Dtype dtype) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("from_floats: " + std::to_string(values.size()) +
                     " values do not fill shape " + shape_str(shape));
  }
  auto impl = detail::make_impl(std::move(shape), dtype);
  dispatch_dtype(dtype, [&]<typename T>() {
    auto& v = impl->values<T>();
    std::transform(values.begin(), values.end(), v.begin(),
                   [](float x) { return static_cast<T>(x); });
  });
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, Dtype dtype) { return full({}, value, dtype); }

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::size(int axis) const {
  return shape()[detail::normalize_axis("size", axis, dim())];
}

std::size_t Tensor::numel() const { return impl_->numel(); }
Dtype Tensor::dtype() const { return impl_->dtype; }
bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
bool Tensor::is_leaf() const { return !impl_->grad_fn; }

std::string_view Tensor::op_name() const {
  return impl_->grad_fn ? impl_->grad_fn->op : std::string_view{};
}

Tensor& Tensor::set_requires_grad(bool value) {
  if (!is_leaf()) throw std::logic_error("set_requires_grad: only leaf tensors can be marked");
  impl_->requires_grad = value;
  return *this;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a single value");
  }
  return value(0);
}

double Tensor::value(std::size_t i) const {
  return dispatch_dtype(dtype(), [&]<typename T>() -> double { return impl_->values<T>().at(i); });
}

void Tensor::set_value(std::size_t i, double v) {
  dispatch_dtype(dtype(), [&]<typename T>() { impl_->values<T>().at(i) = static_cast<T>(v); });
}

std::vector<double> Tensor::to_vector() const {
  return dispatch_dtype(dtype(), [&]<typename T>() {
    const auto& v = impl_->values<T>();
    return std::vector<double>(v.begin(), v.end());
  });
}

Tensor Tensor::grad() const { return impl_->grad ? Tensor(impl_->grad) : Tensor(); }

void Tensor::zero_grad() { impl_->grad.reset(); }

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->dtype = impl_->dtype;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::to(Dtype target) const {
  if (target == dtype()) return detach();
  auto impl = detail::make_impl(shape(), target);
  dispatch_dtype(dtype(), [&]<typename S>() {
    dispatch_dtype(target, [&]<typename D>() {
      const auto& src = impl_->values<S>();
      auto& dst = impl->values<D>();
      std::transform(src.begin(), src.end(), dst.begin(),
                     [](S x) { return static_cast<D>(x); });
    });
  });
  return Tensor(std::move(impl));
}

namespace {

// Post-order over the recorded graph: every node appears after its inputs.
std::vector<detail::TensorImpl*> topo_order(detail::TensorImpl* root) {
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> visited;
  struct Frame {
    detail::TensorImpl* impl;
    std::size_t next_input;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = f.impl->grad_fn;
    if (node && f.next_input < node->inputs.size()) {
      detail::TensorImpl* in = node->inputs[f.next_input++].get();
      if (in->requires_grad && in->grad_fn && visited.insert(in).second) {
        stack.push_back({in, 0});
      }
      continue;
    }
    order.push_back(f.impl);
    stack.pop_back();
  }
  return order;
}

}  // namespace

void Tensor::backward() const {
  if (numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(shape()));
  }
  if (!requires_grad()) {
    throw std::logic_error("backward: loss is not connected to any leaf that requires grad");
  }
  auto& seed = detail::grad_buffer(*impl_);
  dispatch_dtype(dtype(), [&]<typename T>() { seed.values<T>()[0] += T(1); });
  if (!impl_->grad_fn) return;

  const auto order = topo_order(impl_.get());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* impl = *it;
    if (!impl->grad) continue;
    impl->grad_fn->backward(*impl, *impl->grad);
    // Intermediate gradients are not observable once propagated.
    if (impl != impl_.get()) impl->grad.reset();
  }
}

}  // namespace mvhmr
