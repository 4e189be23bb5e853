#include "knowsite/optim.hpp"

#include <cmath>
#include <sstream>

namespace knowsite::num {

Parameter& ParameterStore::add(const std::string& name, Tensor t) {
  if (index_.count(name)) {
    throw ContractError("parameter registered twice: " + name);
  }
  if (!t.requires_grad()) {
    throw ContractError("parameter must require grad: " + name);
  }
  index_[name] = params_.size();
  params_.push_back(Parameter{name, std::move(t), {}, {}, 0});
  return params_.back();
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown parameter: " + name);
  return params_[it->second];
}

bool ParameterStore::contains(const std::string& name) const {
  return index_.count(name) > 0;
}

int64_t ParameterStore::scalar_count() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void ParameterStore::clear_grads() {
  for (auto& p : params_) p.tensor.clear_grad();
}

ParameterStore::Snapshot ParameterStore::snapshot() const {
  Snapshot s;
  for (const auto& p : params_) {
    s.values.push_back(p.tensor.value());
    s.m.push_back(p.m);
    s.v.push_back(p.v);
    s.steps.push_back(p.steps);
  }
  return s;
}

void ParameterStore::restore(const Snapshot& s) {
  if (s.values.size() != params_.size()) {
    throw ContractError("snapshot does not match parameter store");
  }
  for (size_t i = 0; i < params_.size(); ++i) {
    params_[i].tensor.leaf_value() = s.values[i];
    params_[i].m = s.m[i];
    params_[i].v = s.v[i];
    params_[i].steps = s.steps[i];
  }
}

void adam_step(ParameterStore& store, double lr, const AdamConfig& cfg) {
  for (auto& p : store.params()) {
    if (!p.tensor.has_grad()) {
      throw ContractError("optimizer step with missing gradient on " + p.name);
    }
  }
  for (auto& p : store.params()) {
    const auto& g = p.tensor.grad();
    auto& x = p.tensor.leaf_value();
    if (p.m.empty()) {
      p.m.assign(x.size(), 0.0);
      p.v.assign(x.size(), 0.0);
    }
    p.steps += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.steps));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.steps));
    for (size_t i = 0; i < x.size(); ++i) {
      p.m[i] = cfg.beta1 * p.m[i] + (1.0 - cfg.beta1) * g[i];
      p.v[i] = cfg.beta2 * p.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = p.m[i] / bc1;
      const double vhat = p.v[i] / bc2;
      x[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p.tensor.clear_grad();
  }
}

std::vector<std::vector<double>> finite_difference_gradient(
    const std::function<double()>& f, ParameterStore& store, double eps) {
  if (eps <= 0.0) throw ContractError("finite differences need eps > 0");
  std::vector<std::vector<double>> grads;
  for (auto& p : store.params()) {
    auto& x = p.tensor.leaf_value();
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + eps;
      const double fp = f();
      x[i] = orig - eps;
      const double fm = f();
      x[i] = orig;
      g[i] = (fp - fm) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

bool grad_close(double a, double b, double rtol, double atol) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

std::string check_gradients(const std::function<Tensor()>& loss_fn,
                            ParameterStore& store, double eps, double rtol,
                            double atol) {
  store.clear_grads();
  Tensor loss = loss_fn();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  for (auto& p : store.params()) {
    analytic.push_back(p.tensor.has_grad()
                           ? p.tensor.grad()
                           : std::vector<double>(p.tensor.value().size(), 0.0));
  }
  store.clear_grads();
  auto numeric = finite_difference_gradient(
      [&] { return loss_fn().item(); }, store, eps);
  std::ostringstream worst;
  double worst_gap = 0.0;
  for (size_t p = 0; p < analytic.size(); ++p) {
    for (size_t i = 0; i < analytic[p].size(); ++i) {
      const double a = analytic[p][i], n = numeric[p][i];
      if (!grad_close(a, n, rtol, atol)) {
        const double gap =
            std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-12});
        if (gap > worst_gap) {
          worst_gap = gap;
          worst.str("");
          worst << store.params()[p].name << "[" << i << "]: backward=" << a
                << " fd=" << n;
        }
      }
    }
  }
  return worst.str();
}

}  // namespace knowsite::num
