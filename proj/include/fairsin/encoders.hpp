#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fairsin/autodiff.hpp"
#include "fairsin/graph.hpp"
#include "fairsin/nn.hpp"
#include "fairsin/optim.hpp"

namespace fairsin {

enum class EncoderKind { GCN, GIN, SAGE };

std::string to_string(EncoderKind k);
EncoderKind parse_encoder_kind(const std::string& s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::GCN;
  std::size_t n_layers = 2;
  std::size_t hidden_dim = 16;
  double dropout_p = 0.5;

  void validate() const;
};

// D^-1/2 (W + I) D^-1/2 with D the weighted row sums of W + I.
SparseMatrix normalize_adjacency(const Graph& g);
// W + (1 + eps) I with eps = 0: GIN sum aggregation including the node itself.
SparseMatrix gin_aggregation(const Graph& g);
// Row-normalized W (weighted neighbor mean). Isolated nodes get an empty row.
SparseMatrix mean_aggregation(const Graph& g);

// The per-kind sparse operator an encoder multiplies layer inputs with.
struct Propagation {
  EncoderKind kind = EncoderKind::GCN;
  std::shared_ptr<const SparseMatrix> op;
};
Propagation make_propagation(const Graph& g, EncoderKind kind);

// Supplies the layer input H~^k from H^k. The identity hook gives a vanilla encoder.
using LayerHook = std::function<ad::Var(std::size_t layer, ad::Var h)>;
ad::Var identity_hook(std::size_t layer, ad::Var h);

struct ForwardMode {
  bool training = false;
  std::uint64_t dropout_seed = 0;
  bool trainable = true;  // bind encoder parameters as trainable leaves
};

/// K-layer message-passing encoder (GCN, GIN or GraphSAGE) plus a linear
/// two-class head. Parameters live in a caller-owned ParamStore.
class Encoder {
 public:
  Encoder(EncoderConfig cfg, std::size_t in_dim);

  void init(ParamStore& store, std::mt19937_64& rng) const;

  const EncoderConfig& config() const { return cfg_; }
  std::size_t in_dim() const { return in_dim_; }
  // Width of H^k, the input of layer k (k = 0 is the feature width).
  std::size_t layer_width(std::size_t k) const { return k == 0 ? in_dim_ : cfg_.hidden_dim; }
  std::size_t out_width() const { return cfg_.hidden_dim; }

  struct Output {
    ad::Var representation;            // H^K
    std::vector<ad::Var> layer_inputs;  // H^k before the hook, k < K
  };
  // Dropout is applied to H~^k for k >= 1 in training mode.
  Output encode(ParamStore& store, const Propagation& prop, ad::Var x, const LayerHook& hook,
                const ForwardMode& mode) const;

  ad::Var classify(ParamStore& store, ad::Var h, bool trainable) const;

 private:
  ad::Var layer(ParamStore& store, const Propagation& prop, std::size_t k, ad::Var h,
                bool trainable) const;

  EncoderConfig cfg_;
  std::size_t in_dim_;
};

// Row-wise argmax with ties going to the lowest class index.
std::vector<int> argmax_rows(const Matrix& logits);

}  // namespace fairsin
