#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairsin/autodiff.hpp"
#include "fairsin/graph.hpp"
#include "fairsin/nn.hpp"
#include "fairsin/optim.hpp"

namespace fairsin {

enum class Variant { NONE, G, F, FULL };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct NeutralizeConfig {
  double delta = 1.0;
  // Optional per-layer override; when non-empty its length must equal K.
  std::vector<double> per_layer_delta;
  Variant variant = Variant::FULL;

  double delta_at(std::size_t layer) const;
  void validate(std::size_t n_layers) const;
};

/// Mean representation of each node's heterogeneous neighbors (neighbors with
/// the other sensitive value). Rows without such neighbors are zero and are
/// flagged has_target = false.
struct HeteroTarget {
  Matrix targets;
  std::vector<bool> has_target;

  std::vector<std::size_t> eligible() const;
};

HeteroTarget hetero_mean(const Graph& g, const Matrix& h);
// Sparse operator M with hetero_mean(g, h).targets == M * h.
SparseMatrix hetero_mean_operator(const Graph& g);

// Edge weight 1 + delta on edges joining different groups, 1 otherwise.
Graph reweight_edges(const Graph& g, double delta);

/// Per-layer estimator: a 3-layer MLP width -> width -> width -> width
/// predicting the heterogeneous-neighbor mean of a node from its own row.
class Estimator {
 public:
  Estimator() = default;
  Estimator(std::size_t width, std::size_t layer);

  void init(ParamStore& store, std::mt19937_64& rng) const { mlp_.init(store, rng); }
  ad::Var forward(ParamStore& store, ad::Var h, bool trainable) const {
    return mlp_.forward(store, h, trainable);
  }
  Matrix apply(ParamStore& store, const Matrix& h) const { return mlp_.apply(store, h); }
  std::size_t width() const { return mlp_.in_width(); }
  std::size_t layer() const { return layer_; }

 private:
  nn::Mlp mlp_;
  std::size_t layer_ = 0;
};

struct EstimatorFitConfig {
  std::size_t epochs = 200;
  AdamConfig adam{};
};

struct EstimatorFit {
  double final_loss = 0.0;
  std::vector<double> loss_history;  // loss before each update, then the final loss
};

// Full-batch Adam on the masked MSE between est(h) and hetero_mean(g, h),
// restricted to nodes with at least one heterogeneous neighbor.
EstimatorFit fit_estimator(const Graph& g, const Matrix& h, const Estimator& est,
                           ParamStore& store, const EstimatorFitConfig& cfg);

// H~ = H + delta * est(H). delta == 0 returns H unchanged.
Matrix neutralize(const Matrix& h, const Estimator& est, ParamStore& store, double delta);
ad::Var neutralize(ad::Var h, const Estimator& est, ParamStore& store, double delta,
                   bool trainable);

struct FairsinF {
  Graph graph;
  Estimator estimator;
  ParamStore params;
  double final_loss = 0.0;
};

// Fits the layer-0 estimator on raw features and returns a graph whose
// features are X + delta * est(X). Topology and weights are untouched.
FairsinF preprocess_fairsin_f(const Graph& g, double delta, const EstimatorFitConfig& cfg,
                              std::uint64_t seed);

}  // namespace fairsin
