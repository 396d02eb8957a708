#include "fairsin/encoders.hpp"

#include <cmath>

#include "fairsin/error.hpp"

namespace fairsin {

std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::GCN: return "gcn";
    case EncoderKind::GIN: return "gin";
    case EncoderKind::SAGE: return "sage";
  }
  return "?";
}

EncoderKind parse_encoder_kind(const std::string& s) {
  if (s == "gcn" || s == "GCN") return EncoderKind::GCN;
  if (s == "gin" || s == "GIN") return EncoderKind::GIN;
  if (s == "sage" || s == "SAGE") return EncoderKind::SAGE;
  throw ConfigError("unknown encoder '" + s + "' (expected gcn, gin or sage)");
}

void EncoderConfig::validate() const {
  if (n_layers < 1) throw ConfigError("encoder n_layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("encoder hidden_dim must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must lie in [0, 1)");
}

SparseMatrix normalize_adjacency(const Graph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<double> deg(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (double w : g.neighbor_weights(i)) deg[i] += w;
  std::vector<Triplet> t;
  t.reserve(g.n_directed_edges() + n);
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({i, i, 1.0 / deg[i]});
    const auto nb = g.neighbors(i);
    const auto w = g.neighbor_weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k)
      t.push_back({i, nb[k], w[k] / std::sqrt(deg[i] * deg[nb[k]])});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

SparseMatrix gin_aggregation(const Graph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<Triplet> t;
  t.reserve(g.n_directed_edges() + n);
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back({i, i, 1.0});
    const auto nb = g.neighbors(i);
    const auto w = g.neighbor_weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k) t.push_back({i, nb[k], w[k]});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

SparseMatrix mean_aggregation(const Graph& g) {
  const std::size_t n = g.n_nodes();
  std::vector<Triplet> t;
  t.reserve(g.n_directed_edges());
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = g.neighbors(i);
    const auto w = g.neighbor_weights(i);
    double total = 0.0;
    for (double x : w) total += x;
    for (std::size_t k = 0; k < nb.size(); ++k) t.push_back({i, nb[k], w[k] / total});
  }
  return SparseMatrix::from_triplets(n, n, std::move(t));
}

Propagation make_propagation(const Graph& g, EncoderKind kind) {
  Propagation p;
  p.kind = kind;
  switch (kind) {
    case EncoderKind::GCN: p.op = std::make_shared<const SparseMatrix>(normalize_adjacency(g)); break;
    case EncoderKind::GIN: p.op = std::make_shared<const SparseMatrix>(gin_aggregation(g)); break;
    case EncoderKind::SAGE: p.op = std::make_shared<const SparseMatrix>(mean_aggregation(g)); break;
  }
  return p;
}

ad::Var identity_hook(std::size_t, ad::Var h) { return h; }

Encoder::Encoder(EncoderConfig cfg, std::size_t in_dim) : cfg_(cfg), in_dim_(in_dim) {
  cfg_.validate();
  if (in_dim_ == 0) throw ConfigError("encoder input width must be >= 1");
}

void Encoder::init(ParamStore& store, std::mt19937_64& rng) const {
  const std::size_t h = cfg_.hidden_dim;
  for (std::size_t k = 0; k < cfg_.n_layers; ++k) {
    const std::string p = "enc." + std::to_string(k);
    const std::size_t d = layer_width(k);
    switch (cfg_.kind) {
      case EncoderKind::GCN: nn::add_linear(store, p, d, h, rng); break;
      case EncoderKind::GIN: nn::Mlp(p + ".mlp", {d, h, h}).init(store, rng); break;
      case EncoderKind::SAGE: nn::add_linear(store, p, 2 * d, h, rng); break;
    }
  }
  nn::add_linear(store, "head", h, 2, rng);
}

ad::Var Encoder::layer(ParamStore& store, const Propagation& prop, std::size_t k, ad::Var h,
                       bool trainable) const {
  const std::string p = "enc." + std::to_string(k);
  switch (cfg_.kind) {
    case EncoderKind::GCN:
      return ad::relu(nn::linear(store, p, ad::spmm(prop.op, h), trainable));
    case EncoderKind::GIN: {
      const nn::Mlp mlp(p + ".mlp", {layer_width(k), cfg_.hidden_dim, cfg_.hidden_dim});
      return ad::relu(mlp.forward(store, ad::spmm(prop.op, h), trainable));
    }
    case EncoderKind::SAGE:
      return ad::relu(nn::linear(store, p, ad::concat(h, ad::spmm(prop.op, h)), trainable));
  }
  throw ConfigError("unknown encoder kind");
}

Encoder::Output Encoder::encode(ParamStore& store, const Propagation& prop, ad::Var x,
                                const LayerHook& hook, const ForwardMode& mode) const {
  if (prop.kind != cfg_.kind) throw ConfigError("propagation operator built for a different encoder");
  if (x.cols() != in_dim_)
    throw ShapeError("encode: feature width " + std::to_string(x.cols()) + " != " + std::to_string(in_dim_));
  Output out;
  ad::Var h = x;
  for (std::size_t k = 0; k < cfg_.n_layers; ++k) {
    out.layer_inputs.push_back(h);
    ad::Var ht = hook(k, h);
    if (ht.rows() != h.rows() || ht.cols() != layer_width(k))
      throw ShapeError("layer hook " + std::to_string(k) + " returned " + std::to_string(ht.rows()) + "x" +
                       std::to_string(ht.cols()) + ", expected " + std::to_string(h.rows()) + "x" +
                       std::to_string(layer_width(k)));
    if (mode.training && k > 0) ht = ad::dropout(ht, cfg_.dropout_p, nn::mix_seed(mode.dropout_seed, k));
    h = layer(store, prop, k, ht, mode.trainable);
  }
  out.representation = h;
  return out;
}

ad::Var Encoder::classify(ParamStore& store, ad::Var h, bool trainable) const {
  if (h.cols() != cfg_.hidden_dim)
    throw ShapeError("classify: representation width " + std::to_string(h.cols()) + " != " +
                     std::to_string(cfg_.hidden_dim));
  return nn::linear(store, "head", h, trainable);
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace fairsin
