#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairsin/encoders.hpp"
#include "fairsin/graph.hpp"
#include "fairsin/metrics.hpp"
#include "fairsin/neutralizer.hpp"
#include "fairsin/optim.hpp"

namespace fairsin {

struct TrainConfig {
  std::size_t epochs = 200;
  double lr_encoder = 0.01;
  double lr_estimator = 0.1;
  double lr_discriminator = 0.01;
  double weight_decay = 1e-4;  // encoder
  double weight_decay_estimator = 0.0;
  double weight_decay_discriminator = 0.0;
  // Coefficient on L_D inside the adversarial objectives of steps (1) and (2).
  double adv_weight = 1.0;
  NeutralizeConfig neutralize;
  bool no_neutral = false;  // ablation: delta = 0 in the full model
  bool no_discri = false;   // ablation: no discriminator
  std::uint64_t seed = 0;
  // Estimator pre-fit used by the F variant.
  EstimatorFitConfig estimator_fit{};

  void validate(std::size_t n_layers) const;
};

struct LossReport {
  double l_t = 0.0;
  std::optional<double> l_d;  // absent when the discriminator is off
  std::vector<double> l_f;    // one per layer; empty when neutralization is off
};

/// Everything needed to reproduce predictions of a trained model.
struct Checkpoint {
  EncoderConfig encoder;
  std::size_t in_dim = 0;
  NeutralizeConfig neutralize;
  bool no_neutral = false;
  bool no_discri = false;
  ParamStore encoder_params;
  ParamStore estimator_params;
  ParamStore discriminator_params;
  std::size_t epoch = 0;
  double val_acc = 0.0;
  RunMetrics test;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// Bit-exact text round trip (shortest round-trip decimal for every real).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Applies the data-centric variants: G reweights edges, F neutralizes features.
// NONE and FULL return the graph unchanged.
Graph prepare_graph(const Graph& g, const TrainConfig& cfg);

/// Owns the parameters of one training run: encoder (+ head), per-layer
/// estimators and the sensitive discriminator, each with its own Adam state.
class FairsinTrainer {
 public:
  // g must already be prepared (see prepare_graph).
  FairsinTrainer(const Graph& g, Split split, EncoderConfig enc, TrainConfig cfg);

  struct Trainables {
    bool encoder = false;
    bool estimators = false;
    bool discriminator = false;
  };

  struct ForwardPass {
    std::vector<ad::Var> l_f;  // per layer, only when requested and neutralization is on
    std::optional<ad::Var> l_d;
    ad::Var l_t;
    ad::Var representation;
    ad::Var logits;
  };

  // Builds the full objective graph on a tape. Dropout seeds are a function
  // of (seed, epoch) so every step of an epoch sees the same masks.
  ForwardPass forward(ad::Tape& tape, Trainables trainable, bool training, std::size_t epoch,
                      bool with_lf, bool with_ld);

  // Runs steps (1) estimators, (2) encoder, (3) discriminator, one Adam step
  // each, skipping the steps disabled by the variant or ablation flags.
  LossReport training_epoch(std::size_t epoch);

  struct EvalOutput {
    Matrix representation;
    Matrix logits;
  };
  EvalOutput evaluate_forward();
  // Representations from the evaluation pass of the last epoch.
  const EvalOutput& last_eval() const { return last_eval_; }

  bool neutral_active() const { return neutral_active_; }
  bool discri_active() const { return discri_active_; }
  const std::vector<std::string>& trace() const { return trace_; }
  const Split& split() const { return split_; }
  const Graph& graph() const { return g_; }
  const Encoder& encoder() const { return encoder_; }
  const std::vector<Estimator>& estimators() const { return estimators_; }

  ParamStore& encoder_params() { return enc_params_; }
  ParamStore& estimator_params() { return est_params_; }
  ParamStore& discriminator_params() { return disc_params_; }

  // Discriminator logits for fixed representations.
  ad::Var discriminate(ad::Var h, bool trainable);
  double discriminator_loss(const Matrix& representation);
  void discriminator_step(const Matrix& representation);

  Checkpoint snapshot(std::size_t epoch, double val_acc, const RunMetrics& test) const;

 private:
  void check_finite(double v, std::size_t epoch, const char* term) const;

  Graph g_;
  Split split_;
  EncoderConfig enc_cfg_;
  TrainConfig cfg_;
  Encoder encoder_;
  Propagation prop_;
  std::shared_ptr<const SparseMatrix> hetero_op_;
  std::vector<std::size_t> hetero_idx_;
  std::vector<Estimator> estimators_;
  nn::Mlp discriminator_;
  ParamStore enc_params_;
  ParamStore est_params_;
  ParamStore disc_params_;
  bool neutral_active_ = false;
  bool discri_active_ = false;
  EvalOutput last_eval_;
  std::vector<std::string> trace_;
};

struct TrainResult {
  Checkpoint best;
  RunMetrics test;
  std::vector<LossReport> history;
  std::vector<double> epoch_seconds;
  double total_seconds = 0.0;
  std::vector<std::string> trace;
};

// Prepares the graph for the configured variant, trains for cfg.epochs and
// returns the checkpoint with the best validation accuracy (earliest on ties).
TrainResult train(const Graph& g, const Split& split, const EncoderConfig& enc,
                  const TrainConfig& cfg);

// Forward pass with neutralization hooks active and dropout off. g must be
// the prepared graph the checkpoint was trained on. eval_idx = labeled nodes.
Predictions predict(const Graph& g, const Checkpoint& ckpt);

}  // namespace fairsin
