#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "knowsite/errors.hpp"
#include "knowsite/rng.hpp"

namespace knowsite::num {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until touched by backward()
  std::vector<std::shared_ptr<Node>> parents;
  // Consumes the node's grad and accumulates into parents' grads.
  std::function<void(const std::vector<double>&)> backward;

  int64_t numel() const { return static_cast<int64_t>(value.size()); }
  void accumulate(const std::vector<double>& g);
};

}  // namespace detail

// Toggles gradient-graph recording for the current thread.
struct GradMode {
  static bool enabled();
  static void set(bool on);
};

struct NoGradGuard {
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Dense row-major f64 tensor of rank 1..3. Value-semantic handle to a graph
// node; ops on tensors with requires_grad record a dynamic tape, and
// backward() on a scalar fills .grad() on every reachable tensor.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor eye(int64_t n);
  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng,
                        bool requires_grad = false);
  static Tensor normal(Shape shape, double mean, double stddev, Rng& rng,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t rank() const { return static_cast<int64_t>(shape().size()); }
  int64_t dim(int i) const { return shape()[static_cast<size_t>(i)]; }
  int64_t numel() const;
  bool requires_grad() const;

  const std::vector<double>& value() const;
  // Direct mutation is only legal on leaves (no recorded parents); parameters
  // use this for optimizer updates after the graph is dropped.
  std::vector<double>& leaf_value();

  double item() const;  // scalar tensors only
  double at(int64_t i) const;
  double at(int64_t i, int64_t j) const;
  double at(int64_t i, int64_t j, int64_t k) const;

  bool has_grad() const;
  const std::vector<double>& grad() const;
  void zero_grad();   // fill with zeros (allocating if needed)
  void clear_grad();  // drop the grad buffer entirely

  // Deep copy with no graph history.
  Tensor detached_copy(bool requires_grad = false) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// ---- elementwise (same shape) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

// ---- scalar ----
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

// ---- unary ----
Tensor neg(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor rsqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor softplus(const Tensor& a);  // ln(1+e^x), overflow-safe

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k]x[k,n]
Tensor bmm(const Tensor& a, const Tensor& b);     // [B,m,k]x[B,k,n]
Tensor transpose(const Tensor& a);                // 2-D
Tensor reshape(const Tensor& a, Shape shape);
Tensor dot(const Tensor& a, const Tensor& b);  // rank-1, -> scalar

// ---- reductions ----
Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar
Tensor sum_axis0(const Tensor& a);   // [N,d] -> [d]
Tensor mean_axis0(const Tensor& a);  // [N,d] -> [d]

// ---- softmax family ----
// Rank-1 input is treated as a single row; rank-2 rows are independent.
// Stable (max-subtracted); rows sum to 1.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);

// ---- row indexing / assembly ----
Tensor gather_rows(const Tensor& a, const std::vector<int64_t>& idx);
Tensor scatter_add_rows(const Tensor& a, const std::vector<int64_t>& idx,
                        int64_t n_rows);
// Multiplies row i by the constant s[i]; s is not differentiated.
Tensor scale_rows(const Tensor& a, const std::vector<double>& s);
// [N,d] op [d], broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& v);
Tensor sub_rowvec(const Tensor& a, const Tensor& v);
Tensor mul_rowvec(const Tensor& a, const Tensor& v);
// n tensors of [B,d] -> [B,n,d]
Tensor stack_axis1(const std::vector<Tensor>& mats);
// n tensors of [d] -> [n,d]
Tensor stack_rows(const std::vector<Tensor>& rows);

// Pairs (x[2j], x[2j+1]) of a are complex-multiplied by the unit-normalized
// pairs of v. a is [N,d] or [d]; v is [d]; d must be even.
Tensor rotate_compose(const Tensor& a, const Tensor& v);

// Inverted dropout: keeps with prob 1-p and scales kept entries by 1/(1-p).
// p == 0 is the identity.
Tensor dropout(const Tensor& a, double p, Rng& rng);

// Reverse-mode sweep from a scalar loss. Grads accumulate until cleared.
void backward(const Tensor& loss);

}  // namespace knowsite::num
