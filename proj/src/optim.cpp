#include "fairsin/optim.hpp"

#include <cmath>

#include "fairsin/error.hpp"

namespace fairsin {

Parameter& ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (params_.contains(name)) throw ValidationError("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = name;
  p.value = Matrix(rows, cols);
  p.grad = Matrix(rows, cols);
  p.first_moment = Matrix(rows, cols);
  p.second_moment = Matrix(rows, cols);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::add_glorot(const std::string& name, std::size_t rows, std::size_t cols,
                                  std::mt19937_64& rng) {
  Parameter& p = add(name, rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : p.value.data()) v = dist(rng);
  return p;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (auto& [name, p] : params_) {
    const Parameter& src = other.at(name);
    if (!src.value.same_shape(p.value)) throw ShapeError("copy_values_from: shape mismatch for " + name);
    p.value = src.value;
  }
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("adam: learning rate must be positive");
  for (auto& [_, p] : store) {
    ++p.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
    auto& w = p.value.data();
    const auto& g = p.grad.data();
    auto& m = p.first_moment.data();
    auto& v = p.second_moment.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      const double decay = cfg.lr * cfg.weight_decay * w[i];
      w[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps) + decay;
    }
  }
}

}  // namespace fairsin
