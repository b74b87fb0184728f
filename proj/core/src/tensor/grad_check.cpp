#include "mvhmr/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mvhmr {

namespace {

constexpr double kResolutionFactor = 1e5;

std::vector<std::size_t> probe_indices(std::size_t n, std::size_t max_probes, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (max_probes == 0 || max_probes >= n) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_probes);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double eval_scalar(const TensorFn& f, std::span<const Tensor> xs) {
  const Tensor y = f(xs);
  if (y.numel() != 1) {
    throw ShapeError("grad_check: function must return a scalar, got shape " + shape_str(y.shape()));
  }
  return y.item();
}

}  // namespace

GradCheckReport grad_check(const TensorFn& f, std::span<const Tensor> inputs,
                           const GradCheckOptions& options) {
  if (!(options.step > 0)) throw std::invalid_argument("grad_check: step must be positive");
  GradCheckReport report;
  report.tol = options.tol;

  std::vector<Tensor> leaves;
  for (const auto& x : inputs) {
    Tensor leaf = x.detach();
    leaf.set_requires_grad(true);
    leaves.push_back(leaf);
  }
  const Tensor y = f(leaves);
  if (y.numel() != 1) {
    throw ShapeError("grad_check: function must return a scalar, got shape " + shape_str(y.shape()));
  }
  if (y.requires_grad()) y.backward();

  std::vector<Tensor> ref;
  for (const auto& x : inputs) ref.push_back(x.to(Dtype::f64));
  std::mt19937_64 rng(options.seed);
  NoGradGuard no_grad;
  // Central differences cannot resolve derivatives below ~eps |f| / h.
  const double resolution =
      kResolutionFactor * std::numeric_limits<double>::epsilon() * std::abs(eval_scalar(f, ref)) / options.step;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const Tensor g = leaves[k].grad();
    const auto idx = probe_indices(ref[k].numel(), options.max_probes, rng);
    std::vector<double> analytic(idx.size()), numeric(idx.size());
    double scale = 0.0;
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const std::size_t i = idx[p];
      const double x0 = ref[k].value(i);
      ref[k].set_value(i, x0 + options.step);
      const double fp = eval_scalar(f, ref);
      ref[k].set_value(i, x0 - options.step);
      const double fm = eval_scalar(f, ref);
      ref[k].set_value(i, x0);
      numeric[p] = (fp - fm) / (2.0 * options.step);
      analytic[p] = g.defined() ? g.value(i) : 0.0;
      scale = std::max(scale, std::abs(numeric[p]));
    }
    const double floor = std::max({1e-3 * scale, resolution, 1e-12});
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const double a = analytic[p], n = numeric[p];
      const double err = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
      const double e = std::isnan(err) ? INFINITY : err;
      if (++report.probes == 1 || e > report.max_rel_error) {
        report.max_rel_error = e;
        report.worst_input = k;
        report.worst_index = idx[p];
        report.worst_analytic = a;
        report.worst_numeric = n;
      }
    }
  }
  report.passed = report.max_rel_error < options.tol;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double step, double tol) {
  GradCheckOptions opt;
  opt.step = step;
  opt.tol = tol;
  const Tensor xs[] = {x};
  return grad_check([&f](std::span<const Tensor> in) { return f(in[0]); }, xs, opt);
}

}  // namespace mvhmr
