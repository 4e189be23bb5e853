#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "knowsite/tensor.hpp"

namespace knowsite::num {

// A named trainable tensor plus its Adam moment buffers.
struct Parameter {
  std::string name;
  Tensor tensor;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  int64_t steps = 0;
};

// Owns the model's parameter list (the set the loss is minimized over).
// Names are unique; registration order is the canonical iteration order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor t);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  size_t size() const { return params_.size(); }
  int64_t scalar_count() const;

  void zero_grads();
  void clear_grads();

  // Deep snapshot / restore of values and optimizer state.
  struct Snapshot {
    std::vector<std::vector<double>> values, m, v;
    std::vector<int64_t> steps;
  };
  Snapshot snapshot() const;
  void restore(const Snapshot& s);

 private:
  std::vector<Parameter> params_;
  std::map<std::string, size_t> index_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update over every parameter; requires grads populated by
// backward() and clears them afterwards.
void adam_step(ParameterStore& store, double lr,
               const AdamConfig& cfg = AdamConfig{});

// Central differences (f(x+eps)-f(x-eps))/(2 eps) for every scalar entry of
// every parameter. f must be a deterministic pure function of the store.
// Independent of the tape: uses only value mutation and re-evaluation.
std::vector<std::vector<double>> finite_difference_gradient(
    const std::function<double()>& f, ParameterStore& store, double eps);

// |a-b| <= atol + rtol*max(|a|,|b|), the gradient-check comparison.
bool grad_close(double a, double b, double rtol = 1e-4, double atol = 1e-7);

// Runs backward() on loss_fn() and compares every parameter gradient against
// the finite-difference oracle. Returns the worst offending description, or
// an empty string when everything matches.
std::string check_gradients(const std::function<Tensor()>& loss_fn,
                            ParameterStore& store, double eps = 1e-5,
                            double rtol = 1e-4, double atol = 1e-7);

}  // namespace knowsite::num
