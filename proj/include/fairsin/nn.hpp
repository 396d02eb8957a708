#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fairsin/autodiff.hpp"
#include "fairsin/optim.hpp"

namespace fairsin::nn {

// Registers "<prefix>.weight" (in x out, Glorot) and "<prefix>.bias" (1 x out, zero).
void add_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                std::mt19937_64& rng);
// x * W + b. Parameters are bound as trainable leaves only when trainable is set.
ad::Var linear(ParamStore& store, const std::string& prefix, ad::Var x, bool trainable);

/// Fully connected stack with ReLU between layers and a linear output.
/// widths = {in, h1, ..., out}; layer l is stored under "<prefix>.<l>".
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string prefix, std::vector<std::size_t> widths);

  void init(ParamStore& store, std::mt19937_64& rng) const;
  ad::Var forward(ParamStore& store, ad::Var x, bool trainable) const;
  // Inference without a caller-owned tape.
  Matrix apply(ParamStore& store, const Matrix& x) const;

  std::size_t in_width() const { return widths_.front(); }
  std::size_t out_width() const { return widths_.back(); }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
  std::vector<std::size_t> widths_;
};

// SplitMix64 finalizer; used to derive independent seeds from (seed, tag...).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace fairsin::nn
