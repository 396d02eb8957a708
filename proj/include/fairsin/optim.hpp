#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fairsin/matrix.hpp"

namespace fairsin {

/// A named trainable tensor together with its gradient buffer and Adam state.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;
  std::int64_t step = 0;
};

/// Named parameters of one model component. Iteration order is by name, so
/// every traversal (init, update, serialization) is deterministic.
class ParamStore {
 public:
  // Adds a zero-initialized parameter; throws if the name exists.
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols);
  // Glorot-uniform initialization driven by the given engine.
  Parameter& add_glorot(const std::string& name, std::size_t rows, std::size_t cols,
                        std::mt19937_64& rng);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  // Replaces values (not optimizer state) from another store with identical names and shapes.
  void copy_values_from(const ParamStore& other);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

struct AdamConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update over every parameter in the store, with bias correction.
// Weight decay is decoupled: theta -= lr * wd * theta after the moment step.
void adam_step(ParamStore& store, const AdamConfig& cfg);

}  // namespace fairsin
