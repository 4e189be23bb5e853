#include "knowsite/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace knowsite::num {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace detail {

void Node::accumulate(const std::vector<double>& g) {
  if (!requires_grad) return;
  if (grad.empty()) grad.assign(value.size(), 0.0);
  for (size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

}  // namespace detail

namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

void check_rank(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw DimensionError("rank must be 1..3, got " + shape_str(shape));
  }
  for (int64_t d : shape) {
    if (d <= 0) throw DimensionError("nonpositive dim in " + shape_str(shape));
  }
}

NodePtr make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  check_rank(shape);
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw DimensionError("data size " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return n;
}

// Backward receives (out_grad, out_node); parents are captured by the caller.
Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<NodePtr> parents,
               std::function<void(const std::vector<double>&)> backward) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool need = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) need = need || p->requires_grad;
  }
  n->requires_grad = need;
  if (need) {
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Tensor(n);
}

#define NODE(t)                                                   \
  ((t).defined() ? (t).node()                                     \
                 : (throw ContractError("use of undefined tensor"), \
                    std::shared_ptr<Node>()))

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool on) { g_grad_enabled = on; }

// ---------------------------------------------------------------------------
// Tensor basics
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0),
                          requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(
      make_leaf(std::move(shape), std::vector<double>(n, v), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor(make_leaf({1}, {v}, requires_grad));
}

Tensor Tensor::eye(int64_t n) {
  std::vector<double> d(static_cast<size_t>(n * n), 0.0);
  for (int64_t i = 0; i < n; ++i) d[static_cast<size_t>(i * n + i)] = 1.0;
  return Tensor(make_leaf({n, n}, std::move(d), false));
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng,
                       bool requires_grad) {
  auto n = shape_numel(shape);
  std::vector<double> d(static_cast<size_t>(n));
  for (auto& x : d) x = rng.uniform(lo, hi);
  return Tensor(make_leaf(std::move(shape), std::move(d), requires_grad));
}

Tensor Tensor::normal(Shape shape, double mean, double stddev, Rng& rng,
                      bool requires_grad) {
  auto n = shape_numel(shape);
  std::vector<double> d(static_cast<size_t>(n));
  for (auto& x : d) x = rng.normal(mean, stddev);
  return Tensor(make_leaf(std::move(shape), std::move(d), requires_grad));
}

const Shape& Tensor::shape() const { return NODE(*this)->shape; }

int64_t Tensor::numel() const { return NODE(*this)->numel(); }

bool Tensor::requires_grad() const { return NODE(*this)->requires_grad; }

const std::vector<double>& Tensor::value() const { return NODE(*this)->value; }

std::vector<double>& Tensor::leaf_value() {
  auto n = NODE(*this);
  if (!n->parents.empty()) {
    throw ContractError("in-place mutation of a non-leaf tensor");
  }
  return n->value;
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
  }
  return value()[0];
}

double Tensor::at(int64_t i) const { return value()[static_cast<size_t>(i)]; }
double Tensor::at(int64_t i, int64_t j) const {
  return value()[static_cast<size_t>(i * dim(1) + j)];
}
double Tensor::at(int64_t i, int64_t j, int64_t k) const {
  return value()[static_cast<size_t>((i * dim(1) + j) * dim(2) + k)];
}

bool Tensor::has_grad() const { return !NODE(*this)->grad.empty(); }

const std::vector<double>& Tensor::grad() const {
  auto n = NODE(*this);
  if (n->grad.empty()) throw ContractError("grad() before backward()");
  return n->grad;
}

void Tensor::zero_grad() {
  auto n = NODE(*this);
  n->grad.assign(n->value.size(), 0.0);
}

void Tensor::clear_grad() { NODE(*this)->grad.clear(); }

Tensor Tensor::detached_copy(bool requires_grad) const {
  auto n = NODE(*this);
  return Tensor(make_leaf(n->shape, n->value, requires_grad));
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto pa = NODE(a), pb = NODE(b);
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] + pb->value[i];
  return make_op(pa->shape, std::move(out), {pa, pb},
                 [pa, pb](const std::vector<double>& g) {
                   pa->accumulate(g);
                   pb->accumulate(g);
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto pa = NODE(a), pb = NODE(b);
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] - pb->value[i];
  return make_op(pa->shape, std::move(out), {pa, pb},
                 [pa, pb](const std::vector<double>& g) {
                   pa->accumulate(g);
                   if (pb->requires_grad) {
                     std::vector<double> gb(g.size());
                     for (size_t i = 0; i < g.size(); ++i) gb[i] = -g[i];
                     pb->accumulate(gb);
                   }
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto pa = NODE(a), pb = NODE(b);
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] * pb->value[i];
  return make_op(pa->shape, std::move(out), {pa, pb},
                 [pa, pb](const std::vector<double>& g) {
                   if (pa->requires_grad) {
                     std::vector<double> ga(g.size());
                     for (size_t i = 0; i < g.size(); ++i)
                       ga[i] = g[i] * pb->value[i];
                     pa->accumulate(ga);
                   }
                   if (pb->requires_grad) {
                     std::vector<double> gb(g.size());
                     for (size_t i = 0; i < g.size(); ++i)
                       gb[i] = g[i] * pa->value[i];
                     pb->accumulate(gb);
                   }
                 });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  auto pa = NODE(a), pb = NODE(b);
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] / pb->value[i];
  return make_op(pa->shape, std::move(out), {pa, pb},
                 [pa, pb](const std::vector<double>& g) {
                   if (pa->requires_grad) {
                     std::vector<double> ga(g.size());
                     for (size_t i = 0; i < g.size(); ++i)
                       ga[i] = g[i] / pb->value[i];
                     pa->accumulate(ga);
                   }
                   if (pb->requires_grad) {
                     std::vector<double> gb(g.size());
                     for (size_t i = 0; i < g.size(); ++i) {
                       const double bv = pb->value[i];
                       gb[i] = -g[i] * pa->value[i] / (bv * bv);
                     }
                     pb->accumulate(gb);
                   }
                 });
}

Tensor add_scalar(const Tensor& a, double c) {
  auto pa = NODE(a);
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] + c;
  return make_op(pa->shape, std::move(out), {pa},
                 [pa](const std::vector<double>& g) { pa->accumulate(g); });
}

Tensor mul_scalar(const Tensor& a, double c) {
  auto pa = NODE(a);
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] * c;
  return make_op(pa->shape, std::move(out), {pa},
                 [pa, c](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(g.size());
                   for (size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * c;
                   pa->accumulate(ga);
                 });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

// ---------------------------------------------------------------------------
// Unary
// ---------------------------------------------------------------------------

namespace {

// dvalue(out_value, in_value) gives the local derivative.
template <typename Fwd, typename Dv>
Tensor unary_op(const Tensor& a, Fwd fwd, Dv dvalue) {
  auto pa = NODE(a);
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = fwd(pa->value[i]);
  std::vector<double> outv = out;  // copy survives in the closure
  return make_op(pa->shape, std::move(out), {pa},
                 [pa, outv = std::move(outv),
                  dvalue](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(g.size());
                   for (size_t i = 0; i < g.size(); ++i)
                     ga[i] = g[i] * dvalue(outv[i], pa->value[i]);
                   pa->accumulate(ga);
                 });
}

}  // namespace

Tensor tanh(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double y, double) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a,
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); },
      [](double y, double) { return y; });
}

Tensor log(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::log(x); },
      [](double, double x) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::sqrt(x); },
      [](double y, double) { return 0.5 / std::max(y, 1e-300); });
}

Tensor rsqrt(const Tensor& a) {
  return unary_op(
      a, [](double x) { return 1.0 / std::sqrt(x); },
      [](double y, double x) { return -0.5 * y / x; });
}

Tensor square(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x * x; },
      [](double, double x) { return 2.0 * x; });
}

Tensor softplus(const Tensor& a) {
  return unary_op(
      a,
      [](double x) {
        if (x > 30.0) return x;
        if (x < -30.0) return std::exp(x);
        return std::log1p(std::exp(x));
      },
      [](double, double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
      });
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

namespace {

// C[m,n] += A[m,k] * B[k,n]; ikj order keeps the inner loop contiguous.
void matmul_acc(const double* A, const double* B, double* C, int64_t m,
                int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double a = a_row[p];
      if (a == 0.0) continue;
      const double* b_row = B + p * n;
      for (int64_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

// C[m,n] += A[m,k] * B^T where B is [n,k].
void matmul_bt_acc(const double* A, const double* B, double* C, int64_t m,
                   int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* b_row = B + j * k;
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += a_row[p] * b_row[p];
      c_row[j] += s;
    }
  }
}

// C[k,n] += A^T * G where A is [m,k], G is [m,n].
void matmul_at_acc(const double* A, const double* G, double* C, int64_t m,
                   int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    const double* g_row = G + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double a = a_row[p];
      if (a == 0.0) continue;
      double* c_row = C + p * n;
      for (int64_t j = 0; j < n; ++j) c_row[j] += a * g_row[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  auto pa = NODE(a), pb = NODE(b);
  if (pa->shape.size() != 2 || pb->shape.size() != 2) {
    throw DimensionError("matmul: need rank-2 operands, got " +
                         shape_str(pa->shape) + " and " + shape_str(pb->shape));
  }
  const int64_t m = pa->shape[0], k = pa->shape[1];
  const int64_t k2 = pb->shape[0], n = pb->shape[1];
  if (k != k2) {
    throw DimensionError("matmul: inner dims disagree " + shape_str(pa->shape) +
                         " x " + shape_str(pb->shape));
  }
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  matmul_acc(pa->value.data(), pb->value.data(), out.data(), m, k, n);
  return make_op({m, n}, std::move(out), {pa, pb},
                 [pa, pb, m, k, n](const std::vector<double>& g) {
                   if (pa->requires_grad) {
                     // dA = G * B^T
                     std::vector<double> ga(static_cast<size_t>(m * k), 0.0);
                     matmul_bt_acc(g.data(), pb->value.data(), ga.data(), m, n,
                                   k);
                     pa->accumulate(ga);
                   }
                   if (pb->requires_grad) {
                     // dB = A^T * G
                     std::vector<double> gb(static_cast<size_t>(k * n), 0.0);
                     matmul_at_acc(pa->value.data(), g.data(), gb.data(), m, k,
                                   n);
                     pb->accumulate(gb);
                   }
                 });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  auto pa = NODE(a), pb = NODE(b);
  if (pa->shape.size() != 3 || pb->shape.size() != 3) {
    throw DimensionError("bmm: need rank-3 operands");
  }
  const int64_t B = pa->shape[0], m = pa->shape[1], k = pa->shape[2];
  if (pb->shape[0] != B || pb->shape[1] != k) {
    throw DimensionError("bmm: shapes disagree " + shape_str(pa->shape) +
                         " x " + shape_str(pb->shape));
  }
  const int64_t n = pb->shape[2];
  std::vector<double> out(static_cast<size_t>(B * m * n), 0.0);
  for (int64_t i = 0; i < B; ++i) {
    matmul_acc(pa->value.data() + i * m * k, pb->value.data() + i * k * n,
               out.data() + i * m * n, m, k, n);
  }
  return make_op({B, m, n}, std::move(out), {pa, pb},
                 [pa, pb, B, m, k, n](const std::vector<double>& g) {
                   if (pa->requires_grad) {
                     std::vector<double> ga(static_cast<size_t>(B * m * k),
                                            0.0);
                     for (int64_t i = 0; i < B; ++i) {
                       matmul_bt_acc(g.data() + i * m * n,
                                     pb->value.data() + i * k * n,
                                     ga.data() + i * m * k, m, n, k);
                     }
                     pa->accumulate(ga);
                   }
                   if (pb->requires_grad) {
                     std::vector<double> gb(static_cast<size_t>(B * k * n),
                                            0.0);
                     for (int64_t i = 0; i < B; ++i) {
                       matmul_at_acc(pa->value.data() + i * m * k,
                                     g.data() + i * m * n,
                                     gb.data() + i * k * n, m, k, n);
                     }
                     pb->accumulate(gb);
                   }
                 });
}

Tensor transpose(const Tensor& a) {
  auto pa = NODE(a);
  if (pa->shape.size() != 2) throw DimensionError("transpose: need rank-2");
  const int64_t m = pa->shape[0], n = pa->shape[1];
  std::vector<double> out(static_cast<size_t>(m * n));
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j)
      out[static_cast<size_t>(j * m + i)] = pa->value[static_cast<size_t>(i * n + j)];
  return make_op({n, m}, std::move(out), {pa},
                 [pa, m, n](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(g.size());
                   for (int64_t i = 0; i < n; ++i)
                     for (int64_t j = 0; j < m; ++j)
                       ga[static_cast<size_t>(j * n + i)] =
                           g[static_cast<size_t>(i * m + j)];
                   pa->accumulate(ga);
                 });
}

Tensor reshape(const Tensor& a, Shape shape) {
  auto pa = NODE(a);
  check_rank(shape);
  if (shape_numel(shape) != pa->numel()) {
    throw DimensionError("reshape: numel mismatch " + shape_str(pa->shape) +
                         " -> " + shape_str(shape));
  }
  std::vector<double> out = pa->value;
  return make_op(std::move(shape), std::move(out), {pa},
                 [pa](const std::vector<double>& g) { pa->accumulate(g); });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  auto pa = NODE(a), pb = NODE(b);
  if (pa->shape.size() != 1 || pb->shape.size() != 1) {
    throw DimensionError("dot: need rank-1 operands");
  }
  return sum(mul(a, b));
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
  auto pa = NODE(a);
  double s = 0.0;
  for (double v : pa->value) s += v;
  return make_op({1}, {s}, {pa}, [pa](const std::vector<double>& g) {
    if (!pa->requires_grad) return;
    std::vector<double> ga(pa->value.size(), g[0]);
    pa->accumulate(ga);
  });
}

Tensor mean(const Tensor& a) {
  auto pa = NODE(a);
  const double inv = 1.0 / static_cast<double>(pa->numel());
  double s = 0.0;
  for (double v : pa->value) s += v;
  return make_op({1}, {s * inv}, {pa}, [pa, inv](const std::vector<double>& g) {
    if (!pa->requires_grad) return;
    std::vector<double> ga(pa->value.size(), g[0] * inv);
    pa->accumulate(ga);
  });
}

namespace {

Tensor axis0_reduce(const Tensor& a, bool take_mean) {
  auto pa = NODE(a);
  if (pa->shape.size() != 2) throw DimensionError("axis0 reduce: need rank-2");
  const int64_t n = pa->shape[0], d = pa->shape[1];
  const double scale = take_mean ? 1.0 / static_cast<double>(n) : 1.0;
  std::vector<double> out(static_cast<size_t>(d), 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j)
      out[static_cast<size_t>(j)] += pa->value[static_cast<size_t>(i * d + j)];
  for (auto& v : out) v *= scale;
  return make_op({d}, std::move(out), {pa},
                 [pa, n, d, scale](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(static_cast<size_t>(n * d));
                   for (int64_t i = 0; i < n; ++i)
                     for (int64_t j = 0; j < d; ++j)
                       ga[static_cast<size_t>(i * d + j)] =
                           g[static_cast<size_t>(j)] * scale;
                   pa->accumulate(ga);
                 });
}

}  // namespace

Tensor sum_axis0(const Tensor& a) { return axis0_reduce(a, false); }
Tensor mean_axis0(const Tensor& a) { return axis0_reduce(a, true); }

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

namespace {

void rows_of(const Shape& shape, int64_t& rows, int64_t& cols) {
  if (shape.size() == 1) {
    rows = 1;
    cols = shape[0];
  } else if (shape.size() == 2) {
    rows = shape[0];
    cols = shape[1];
  } else {
    throw DimensionError("softmax: need rank-1 or rank-2");
  }
}

}  // namespace

Tensor softmax(const Tensor& a) {
  auto pa = NODE(a);
  if (pa->numel() == 0) throw DimensionError("softmax: empty input");
  int64_t rows, cols;
  rows_of(pa->shape, rows, cols);
  std::vector<double> out(pa->value.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = pa->value.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (int64_t j = 0; j < cols; ++j) y[j] /= z;
  }
  std::vector<double> outv = out;
  return make_op(pa->shape, std::move(out), {pa},
                 [pa, outv = std::move(outv), rows,
                  cols](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(g.size());
                   for (int64_t r = 0; r < rows; ++r) {
                     const double* s = outv.data() + r * cols;
                     const double* gr = g.data() + r * cols;
                     double inner = 0.0;
                     for (int64_t j = 0; j < cols; ++j) inner += gr[j] * s[j];
                     for (int64_t j = 0; j < cols; ++j)
                       ga[static_cast<size_t>(r * cols + j)] =
                           s[j] * (gr[j] - inner);
                   }
                   pa->accumulate(ga);
                 });
}

Tensor log_softmax(const Tensor& a) {
  auto pa = NODE(a);
  if (pa->numel() == 0) throw DimensionError("log_softmax: empty input");
  int64_t rows, cols;
  rows_of(pa->shape, rows, cols);
  std::vector<double> out(pa->value.size());
  for (int64_t r = 0; r < rows; ++r) {
    const double* x = pa->value.data() + r * cols;
    double* y = out.data() + r * cols;
    double mx = x[0];
    for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int64_t j = 0; j < cols; ++j) z += std::exp(x[j] - mx);
    const double lz = std::log(z) + mx;
    for (int64_t j = 0; j < cols; ++j) y[j] = x[j] - lz;
  }
  std::vector<double> outv = out;
  return make_op(pa->shape, std::move(out), {pa},
                 [pa, outv = std::move(outv), rows,
                  cols](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(g.size());
                   for (int64_t r = 0; r < rows; ++r) {
                     const double* lg = outv.data() + r * cols;
                     const double* gr = g.data() + r * cols;
                     double gsum = 0.0;
                     for (int64_t j = 0; j < cols; ++j) gsum += gr[j];
                     for (int64_t j = 0; j < cols; ++j)
                       ga[static_cast<size_t>(r * cols + j)] =
                           gr[j] - std::exp(lg[j]) * gsum;
                   }
                   pa->accumulate(ga);
                 });
}

// ---------------------------------------------------------------------------
// Row indexing / assembly
// ---------------------------------------------------------------------------

Tensor gather_rows(const Tensor& a, const std::vector<int64_t>& idx) {
  auto pa = NODE(a);
  if (pa->shape.size() != 2) throw DimensionError("gather_rows: need rank-2");
  const int64_t n = pa->shape[0], d = pa->shape[1];
  const int64_t b = static_cast<int64_t>(idx.size());
  if (b == 0) throw DimensionError("gather_rows: empty index list");
  std::vector<double> out(static_cast<size_t>(b * d));
  for (int64_t i = 0; i < b; ++i) {
    const int64_t r = idx[static_cast<size_t>(i)];
    if (r < 0 || r >= n) {
      throw ContractError("gather_rows: index " + std::to_string(r) +
                          " out of range [0," + std::to_string(n) + ")");
    }
    std::copy_n(pa->value.data() + r * d, d, out.data() + i * d);
  }
  return make_op({b, d}, std::move(out), {pa},
                 [pa, idx, d](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(pa->value.size(), 0.0);
                   for (size_t i = 0; i < idx.size(); ++i) {
                     const double* src = g.data() + i * static_cast<size_t>(d);
                     double* dst =
                         ga.data() + static_cast<size_t>(idx[i]) * d;
                     for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
                   }
                   pa->accumulate(ga);
                 });
}

Tensor scatter_add_rows(const Tensor& a, const std::vector<int64_t>& idx,
                        int64_t n_rows) {
  auto pa = NODE(a);
  if (pa->shape.size() != 2) {
    throw DimensionError("scatter_add_rows: need rank-2");
  }
  const int64_t b = pa->shape[0], d = pa->shape[1];
  if (static_cast<int64_t>(idx.size()) != b) {
    throw DimensionError("scatter_add_rows: index count mismatch");
  }
  std::vector<double> out(static_cast<size_t>(n_rows * d), 0.0);
  for (int64_t i = 0; i < b; ++i) {
    const int64_t r = idx[static_cast<size_t>(i)];
    if (r < 0 || r >= n_rows) {
      throw ContractError("scatter_add_rows: index out of range");
    }
    const double* src = pa->value.data() + i * d;
    double* dst = out.data() + r * d;
    for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
  }
  return make_op({n_rows, d}, std::move(out), {pa},
                 [pa, idx, d](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(pa->value.size());
                   for (size_t i = 0; i < idx.size(); ++i) {
                     const double* src =
                         g.data() + static_cast<size_t>(idx[i]) * d;
                     std::copy_n(src, d, ga.data() + i * static_cast<size_t>(d));
                   }
                   pa->accumulate(ga);
                 });
}

Tensor scale_rows(const Tensor& a, const std::vector<double>& s) {
  auto pa = NODE(a);
  if (pa->shape.size() != 2) throw DimensionError("scale_rows: need rank-2");
  const int64_t n = pa->shape[0], d = pa->shape[1];
  if (static_cast<int64_t>(s.size()) != n) {
    throw DimensionError("scale_rows: scale count mismatch");
  }
  std::vector<double> out(pa->value.size());
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < d; ++j)
      out[static_cast<size_t>(i * d + j)] =
          pa->value[static_cast<size_t>(i * d + j)] * s[static_cast<size_t>(i)];
  return make_op(pa->shape, std::move(out), {pa},
                 [pa, s, d](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(g.size());
                   for (size_t i = 0; i < s.size(); ++i)
                     for (int64_t j = 0; j < d; ++j)
                       ga[i * static_cast<size_t>(d) + static_cast<size_t>(j)] =
                           g[i * static_cast<size_t>(d) +
                             static_cast<size_t>(j)] *
                           s[i];
                   pa->accumulate(ga);
                 });
}

namespace {

enum class RowVecOp { kAdd, kSub, kMul };

Tensor rowvec_op(const Tensor& a, const Tensor& v, RowVecOp op) {
  auto pa = NODE(a), pv = NODE(v);
  if (pa->shape.size() != 2 || pv->shape.size() != 1 ||
      pa->shape[1] != pv->shape[0]) {
    throw DimensionError("rowvec op: need [N,d] and [d], got " +
                         shape_str(pa->shape) + " and " + shape_str(pv->shape));
  }
  const int64_t n = pa->shape[0], d = pa->shape[1];
  std::vector<double> out(pa->value.size());
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < d; ++j) {
      const double x = pa->value[static_cast<size_t>(i * d + j)];
      const double y = pv->value[static_cast<size_t>(j)];
      double r = 0;
      switch (op) {
        case RowVecOp::kAdd: r = x + y; break;
        case RowVecOp::kSub: r = x - y; break;
        case RowVecOp::kMul: r = x * y; break;
      }
      out[static_cast<size_t>(i * d + j)] = r;
    }
  }
  return make_op(
      pa->shape, std::move(out), {pa, pv},
      [pa, pv, n, d, op](const std::vector<double>& g) {
        if (pa->requires_grad) {
          if (op == RowVecOp::kMul) {
            std::vector<double> ga(g.size());
            for (int64_t i = 0; i < n; ++i)
              for (int64_t j = 0; j < d; ++j)
                ga[static_cast<size_t>(i * d + j)] =
                    g[static_cast<size_t>(i * d + j)] *
                    pv->value[static_cast<size_t>(j)];
            pa->accumulate(ga);
          } else {
            pa->accumulate(g);
          }
        }
        if (pv->requires_grad) {
          std::vector<double> gv(static_cast<size_t>(d), 0.0);
          for (int64_t i = 0; i < n; ++i) {
            for (int64_t j = 0; j < d; ++j) {
              const double gij = g[static_cast<size_t>(i * d + j)];
              switch (op) {
                case RowVecOp::kAdd: gv[static_cast<size_t>(j)] += gij; break;
                case RowVecOp::kSub: gv[static_cast<size_t>(j)] -= gij; break;
                case RowVecOp::kMul:
                  gv[static_cast<size_t>(j)] +=
                      gij * pa->value[static_cast<size_t>(i * d + j)];
                  break;
              }
            }
          }
          pv->accumulate(gv);
        }
      });
}

}  // namespace

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  return rowvec_op(a, v, RowVecOp::kAdd);
}
Tensor sub_rowvec(const Tensor& a, const Tensor& v) {
  return rowvec_op(a, v, RowVecOp::kSub);
}
Tensor mul_rowvec(const Tensor& a, const Tensor& v) {
  return rowvec_op(a, v, RowVecOp::kMul);
}

Tensor stack_axis1(const std::vector<Tensor>& mats) {
  if (mats.empty()) throw DimensionError("stack_axis1: empty input");
  std::vector<NodePtr> parents;
  const Shape s0 = mats[0].shape();
  if (s0.size() != 2) throw DimensionError("stack_axis1: need rank-2 inputs");
  const int64_t B = s0[0], d = s0[1];
  const int64_t n = static_cast<int64_t>(mats.size());
  for (const auto& m : mats) {
    if (m.shape() != s0) throw DimensionError("stack_axis1: shape mismatch");
    parents.push_back(NODE(m));
  }
  std::vector<double> out(static_cast<size_t>(B * n * d));
  for (int64_t b = 0; b < B; ++b)
    for (int64_t i = 0; i < n; ++i)
      std::copy_n(parents[static_cast<size_t>(i)]->value.data() + b * d, d,
                  out.data() + (b * n + i) * d);
  auto ps = parents;
  return make_op({B, n, d}, std::move(out), std::move(parents),
                 [ps, B, n, d](const std::vector<double>& g) {
                   for (int64_t i = 0; i < n; ++i) {
                     const auto& p = ps[static_cast<size_t>(i)];
                     if (!p->requires_grad) continue;
                     std::vector<double> gp(static_cast<size_t>(B * d));
                     for (int64_t b = 0; b < B; ++b)
                       std::copy_n(g.data() + (b * n + i) * d, d,
                                   gp.data() + b * d);
                     p->accumulate(gp);
                   }
                 });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw DimensionError("stack_rows: empty input");
  std::vector<NodePtr> parents;
  const Shape s0 = rows[0].shape();
  if (s0.size() != 1) throw DimensionError("stack_rows: need rank-1 inputs");
  const int64_t d = s0[0];
  const int64_t n = static_cast<int64_t>(rows.size());
  for (const auto& r : rows) {
    if (r.shape() != s0) throw DimensionError("stack_rows: shape mismatch");
    parents.push_back(NODE(r));
  }
  std::vector<double> out(static_cast<size_t>(n * d));
  for (int64_t i = 0; i < n; ++i)
    std::copy_n(parents[static_cast<size_t>(i)]->value.data(), d,
                out.data() + i * d);
  auto ps = parents;
  return make_op({n, d}, std::move(out), std::move(parents),
                 [ps, d](const std::vector<double>& g) {
                   for (size_t i = 0; i < ps.size(); ++i) {
                     if (!ps[i]->requires_grad) continue;
                     std::vector<double> gp(
                         g.begin() + static_cast<int64_t>(i) * d,
                         g.begin() + static_cast<int64_t>(i + 1) * d);
                     ps[i]->accumulate(gp);
                   }
                 });
}

// ---------------------------------------------------------------------------
// Rotate composition
// ---------------------------------------------------------------------------

Tensor rotate_compose(const Tensor& a, const Tensor& v) {
  auto pa = NODE(a), pv = NODE(v);
  Shape as = pa->shape;
  int64_t n, d;
  if (as.size() == 1) {
    n = 1;
    d = as[0];
  } else if (as.size() == 2) {
    n = as[0];
    d = as[1];
  } else {
    throw DimensionError("rotate_compose: need rank-1 or rank-2 input");
  }
  if (pv->shape.size() != 1 || pv->shape[0] != d) {
    throw DimensionError("rotate_compose: relation vector dim mismatch");
  }
  if (d % 2 != 0) {
    throw DimensionError("rotate_compose: dimension must be even, got " +
                         std::to_string(d));
  }
  const int64_t h = d / 2;
  // Unit-normalize the relation pairs once.
  std::vector<double> cn(static_cast<size_t>(h)), dn(static_cast<size_t>(h)),
      norm(static_cast<size_t>(h));
  for (int64_t j = 0; j < h; ++j) {
    const double c = pv->value[static_cast<size_t>(2 * j)];
    const double s = pv->value[static_cast<size_t>(2 * j + 1)];
    double nb = std::sqrt(c * c + s * s);
    if (nb < 1e-12) {
      // Degenerate pair acts as the identity rotation.
      cn[static_cast<size_t>(j)] = 1.0;
      dn[static_cast<size_t>(j)] = 0.0;
      norm[static_cast<size_t>(j)] = 0.0;
    } else {
      cn[static_cast<size_t>(j)] = c / nb;
      dn[static_cast<size_t>(j)] = s / nb;
      norm[static_cast<size_t>(j)] = nb;
    }
  }
  std::vector<double> out(pa->value.size());
  for (int64_t i = 0; i < n; ++i) {
    const double* x = pa->value.data() + i * d;
    double* y = out.data() + i * d;
    for (int64_t j = 0; j < h; ++j) {
      const double re = x[2 * j], im = x[2 * j + 1];
      const double c = cn[static_cast<size_t>(j)],
                   s = dn[static_cast<size_t>(j)];
      y[2 * j] = re * c - im * s;
      y[2 * j + 1] = re * s + im * c;
    }
  }
  return make_op(
      as, std::move(out), {pa, pv},
      [pa, pv, cn, dn, norm, n, d, h](const std::vector<double>& g) {
        if (pa->requires_grad) {
          std::vector<double> ga(g.size());
          for (int64_t i = 0; i < n; ++i) {
            const double* gr = g.data() + i * d;
            double* out_row = ga.data() + i * d;
            for (int64_t j = 0; j < h; ++j) {
              const double c = cn[static_cast<size_t>(j)],
                           s = dn[static_cast<size_t>(j)];
              out_row[2 * j] = gr[2 * j] * c + gr[2 * j + 1] * s;
              out_row[2 * j + 1] = -gr[2 * j] * s + gr[2 * j + 1] * c;
            }
          }
          pa->accumulate(ga);
        }
        if (pv->requires_grad) {
          std::vector<double> gv(static_cast<size_t>(d), 0.0);
          for (int64_t j = 0; j < h; ++j) {
            const double nb = norm[static_cast<size_t>(j)];
            if (nb == 0.0) continue;  // identity branch, zero gradient
            double g_cn = 0.0, g_dn = 0.0;  // dL/d(normalized pair)
            for (int64_t i = 0; i < n; ++i) {
              const double re = pa->value[static_cast<size_t>(i * d + 2 * j)];
              const double im =
                  pa->value[static_cast<size_t>(i * d + 2 * j + 1)];
              const double gre = g[static_cast<size_t>(i * d + 2 * j)];
              const double gim = g[static_cast<size_t>(i * d + 2 * j + 1)];
              g_cn += gre * re + gim * im;
              g_dn += -gre * im + gim * re;
            }
            const double c = cn[static_cast<size_t>(j)],
                         s = dn[static_cast<size_t>(j)];
            // Jacobian of (c,s)/|(c,s)| w.r.t. the raw pair.
            const double inv = 1.0 / nb;
            gv[static_cast<size_t>(2 * j)] =
                inv * (g_cn * (1.0 - c * c) + g_dn * (-c * s));
            gv[static_cast<size_t>(2 * j + 1)] =
                inv * (g_cn * (-c * s) + g_dn * (1.0 - s * s));
          }
          pv->accumulate(gv);
        }
      });
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

Tensor dropout(const Tensor& a, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ConfigError("dropout probability must be in [0,1), got " +
                      std::to_string(p));
  }
  if (p == 0.0) return a;
  auto pa = NODE(a);
  const double scale = 1.0 / (1.0 - p);
  std::vector<double> mask(pa->value.size());
  for (auto& m : mask) m = rng.bernoulli(p) ? 0.0 : scale;
  std::vector<double> out(pa->value.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] * mask[i];
  return make_op(pa->shape, std::move(out), {pa},
                 [pa, mask = std::move(mask)](const std::vector<double>& g) {
                   if (!pa->requires_grad) return;
                   std::vector<double> ga(g.size());
                   for (size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * mask[i];
                   pa->accumulate(ga);
                 });
}

// ---------------------------------------------------------------------------
// Backward sweep
// ---------------------------------------------------------------------------

void backward(const Tensor& loss) {
  auto root = NODE(loss);
  if (root->numel() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        shape_str(root->shape));
  }
  if (!root->requires_grad) {
    throw ContractError("backward() on a tensor with no gradient path");
  }
  // Iterative post-order DFS over the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next].get();
      ++next;
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->accumulate({1.0});
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(node->grad);
  }
}

}  // namespace knowsite::num
