#include "fairsin/nn.hpp"

#include "fairsin/error.hpp"

namespace fairsin::nn {

void add_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                std::mt19937_64& rng) {
  store.add_glorot(prefix + ".weight", in, out, rng);
  store.add(prefix + ".bias", 1, out);
}

ad::Var linear(ParamStore& store, const std::string& prefix, ad::Var x, bool trainable) {
  ad::Tape& t = *x.tape;
  const ad::Var w = t.parameter(store.at(prefix + ".weight"), trainable);
  const ad::Var b = t.parameter(store.at(prefix + ".bias"), trainable);
  return ad::add_row(ad::matmul(x, w), b);
}

Mlp::Mlp(std::string prefix, std::vector<std::size_t> widths)
    : prefix_(std::move(prefix)), widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ConfigError("Mlp needs at least an input and an output width");
}

void Mlp::init(ParamStore& store, std::mt19937_64& rng) const {
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l)
    add_linear(store, prefix_ + "." + std::to_string(l), widths_[l], widths_[l + 1], rng);
}

ad::Var Mlp::forward(ParamStore& store, ad::Var x, bool trainable) const {
  if (x.cols() != widths_.front())
    throw ShapeError(prefix_ + ": input width " + std::to_string(x.cols()) + " != " +
                     std::to_string(widths_.front()));
  ad::Var h = x;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    h = linear(store, prefix_ + "." + std::to_string(l), h, trainable);
    if (l + 2 < widths_.size()) h = ad::relu(h);
  }
  return h;
}

Matrix Mlp::apply(ParamStore& store, const Matrix& x) const {
  ad::Tape tape;
  return forward(store, tape.constant(x), false).value();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto step = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return step(step(step(seed) ^ a) ^ b);
}

}  // namespace fairsin::nn
