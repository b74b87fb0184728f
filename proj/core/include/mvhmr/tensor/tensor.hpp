#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mvhmr {

enum class Dtype { f32, f64 };

std::string_view dtype_name(Dtype dtype);
Dtype parse_dtype(std::string_view name);

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Raised by ops when operand shapes are incompatible. The message names the op
/// and both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Tensor;

namespace detail {

using Storage = std::variant<std::vector<float>, std::vector<double>>;

struct TensorImpl;

// One recorded op. `backward` receives the op's output and its gradient and
// accumulates into the gradients of `inputs`.
struct Node {
  std::string_view op;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(const TensorImpl& out, const TensorImpl& grad_out)> backward;
};

struct TensorImpl {
  Shape shape;
  Dtype dtype = Dtype::f32;
  Storage data;
  std::shared_ptr<TensorImpl> grad;
  bool requires_grad = false;
  std::shared_ptr<Node> grad_fn;

  std::size_t numel() const { return shape_numel(shape); }

  template <typename T>
  std::vector<T>& values() {
    return std::get<std::vector<T>>(data);
  }
  template <typename T>
  const std::vector<T>& values() const {
    return std::get<std::vector<T>>(data);
  }
};

std::shared_ptr<TensorImpl> make_impl(Shape shape, Dtype dtype);

// Gradient buffer of `impl`, allocated as zeros on first use.
TensorImpl& grad_buffer(TensorImpl& impl);

}  // namespace detail

/// Dense row-major tensor with reverse-mode differentiation.
///
/// A Tensor is a cheap handle; copies share the same underlying values. Ops
/// never write into their inputs, so a tensor with no pending graph behaves
/// as an immutable value. The only in-place writers are optimizers and the
/// finite-difference checker, both of which operate on leaves.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, Dtype dtype = Dtype::f32);
  static Tensor ones(Shape shape, Dtype dtype = Dtype::f32);
  static Tensor full(Shape shape, double value, Dtype dtype = Dtype::f32);
  static Tensor from_vector(Shape shape, std::span<const double> values, Dtype dtype = Dtype::f32);
  static Tensor from_vector(Shape shape, std::initializer_list<double> values,
                            Dtype dtype = Dtype::f32);
  static Tensor from_floats(Shape shape, std::span<const float> values, Dtype dtype = Dtype::f32);
  static Tensor scalar(double value, Dtype dtype = Dtype::f32);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim() const { return shape().size(); }
  // Size along `axis`; negative axes count from the back.
  std::size_t size(int axis) const;
  std::size_t numel() const;
  Dtype dtype() const;

  bool requires_grad() const;
  // Marks a leaf as trainable. Fails on non-leaf tensors.
  Tensor& set_requires_grad(bool value = true);
  bool is_leaf() const;
  std::string_view op_name() const;

  template <typename T>
  std::span<const T> data() const {
    return impl_->values<T>();
  }
  template <typename T>
  std::span<T> mutable_data() {
    return impl_->values<T>();
  }

  double item() const;
  double value(std::size_t flat_index) const;
  void set_value(std::size_t flat_index, double v);
  std::vector<double> to_vector() const;

  // Undefined tensor when no gradient has been accumulated.
  Tensor grad() const;
  void zero_grad();

  // Reverse pass from a scalar. Leaves that require grad accumulate dLoss/dLeaf.
  void backward() const;

  // Copy of the values with no graph attached.
  Tensor detach() const;
  // Value copy converted to `dtype`, no graph attached.
  Tensor to(Dtype dtype) const;

  detail::TensorImpl& impl() const { return *impl_; }
  const std::shared_ptr<detail::TensorImpl>& impl_ptr() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

template <typename F>
decltype(auto) dispatch_dtype(Dtype dtype, F&& f) {
  if (dtype == Dtype::f32) return f.template operator()<float>();
  return f.template operator()<double>();
}

}  // namespace mvhmr
