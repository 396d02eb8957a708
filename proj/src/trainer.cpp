#include "fairsin/trainer.hpp"

#include <chrono>
#include <cmath>

#include "fairsin/error.hpp"

namespace fairsin {

namespace {

constexpr std::uint64_t kEncoderStream = 1;
constexpr std::uint64_t kEstimatorStream = 2;
constexpr std::uint64_t kDiscriminatorStream = 3;
constexpr std::uint64_t kDropoutStream = 4;

Predictions make_predictions(const Graph& g, const Matrix& logits, std::vector<std::size_t> idx) {
  Predictions p;
  p.y_hat = argmax_rows(logits);
  p.y_true = g.labels();
  p.sensitive = g.sensitive();
  p.eval_idx = std::move(idx);
  return p;
}

void check_degenerate(const Graph& g, const Split& split) {
  validate_split(g, split);
  bool s0 = false, s1 = false, y0 = false, y1 = false;
  for (std::size_t i : split.train_idx) {
    (g.sensitive()[i] ? s1 : s0) = true;
    (g.labels()[i] ? y1 : y0) = true;
  }
  if (!(s0 && s1)) throw ValidationError("degenerate split: training set lacks a sensitive group");
  if (!(y0 && y1)) throw ValidationError("degenerate split: training set lacks a label class");
}

}  // namespace

void TrainConfig::validate(std::size_t n_layers) const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(adv_weight >= 0.0)) throw ConfigError("adv_weight must be >= 0");
  for (double lr : {lr_encoder, lr_estimator, lr_discriminator})
    if (!(lr > 0.0)) throw ConfigError("learning rates must be positive");
  for (double wd : {weight_decay, weight_decay_estimator, weight_decay_discriminator})
    if (!(wd >= 0.0)) throw ConfigError("weight decay must be >= 0");
  neutralize.validate(n_layers);
}

Graph prepare_graph(const Graph& g, const TrainConfig& cfg) {
  switch (cfg.neutralize.variant) {
    case Variant::G: return reweight_edges(g, cfg.neutralize.delta);
    case Variant::F: return preprocess_fairsin_f(g, cfg.neutralize.delta, cfg.estimator_fit, cfg.seed).graph;
    case Variant::NONE:
    case Variant::FULL: return g;
  }
  return g;
}

FairsinTrainer::FairsinTrainer(const Graph& g, Split split, EncoderConfig enc, TrainConfig cfg)
    : g_(g),
      split_(std::move(split)),
      enc_cfg_(enc),
      cfg_(std::move(cfg)),
      encoder_(enc, g.n_features()),
      prop_(make_propagation(g, enc.kind)),
      discriminator_("psi", {enc.hidden_dim, enc.hidden_dim, 1}) {
  cfg_.validate(enc.n_layers);
  check_degenerate(g_, split_);

  const bool full = cfg_.neutralize.variant == Variant::FULL;
  bool any_delta = false;
  for (std::size_t k = 0; k < enc.n_layers; ++k) any_delta = any_delta || cfg_.neutralize.delta_at(k) > 0.0;
  neutral_active_ = full && !cfg_.no_neutral && any_delta;
  discri_active_ = full && !cfg_.no_discri;

  std::mt19937_64 enc_rng(nn::mix_seed(cfg_.seed, kEncoderStream));
  encoder_.init(enc_params_, enc_rng);
  if (neutral_active_) {
    if (!g_.has_both_groups()) throw ValidationError("neutralization needs both sensitive groups");
    std::mt19937_64 est_rng(nn::mix_seed(cfg_.seed, kEstimatorStream));
    for (std::size_t k = 0; k < enc.n_layers; ++k) {
      estimators_.emplace_back(encoder_.layer_width(k), k);
      estimators_.back().init(est_params_, est_rng);
    }
    hetero_op_ = std::make_shared<const SparseMatrix>(hetero_mean_operator(g_));
    hetero_idx_ = hetero_mean(g_, Matrix(g_.n_nodes(), 1)).eligible();
    if (hetero_idx_.empty()) throw ValidationError("no node has a heterogeneous neighbor");
  }
  if (discri_active_) {
    std::mt19937_64 disc_rng(nn::mix_seed(cfg_.seed, kDiscriminatorStream));
    discriminator_.init(disc_params_, disc_rng);
  }
}

ad::Var FairsinTrainer::discriminate(ad::Var h, bool trainable) {
  return discriminator_.forward(disc_params_, h, trainable);
}

FairsinTrainer::ForwardPass FairsinTrainer::forward(ad::Tape& tape, Trainables trainable,
                                                    bool training, std::size_t epoch, bool with_lf,
                                                    bool with_ld) {
  const std::size_t K = enc_cfg_.n_layers;
  std::vector<std::optional<ad::Var>> estimates(K);
  LayerHook hook = identity_hook;
  if (neutral_active_) {
    hook = [&](std::size_t k, ad::Var h) {
      const double delta = cfg_.neutralize.delta_at(k);
      if (delta == 0.0) return h;
      const ad::Var e = estimators_[k].forward(est_params_, h, trainable.estimators);
      estimates[k] = e;
      return ad::add(h, ad::scale(e, delta));
    };
  }
  ForwardMode mode;
  mode.training = training;
  mode.dropout_seed = nn::mix_seed(cfg_.seed, kDropoutStream, epoch);
  mode.trainable = trainable.encoder;

  const ad::Var x = tape.constant(g_.features());
  const Encoder::Output enc = encoder_.encode(enc_params_, prop_, x, hook, mode);

  ForwardPass fp;
  fp.representation = enc.representation;
  fp.logits = encoder_.classify(enc_params_, enc.representation, trainable.encoder);
  fp.l_t = ad::softmax_cross_entropy(fp.logits, g_.labels(), split_.train_idx);
  if (with_lf && neutral_active_) {
    for (std::size_t k = 0; k < K; ++k) {
      const ad::Var hk = enc.layer_inputs[k];
      const Matrix target = spmm(*hetero_op_, hk.value());
      // Layer 0 input is the constant feature matrix, so the hook's estimate is reusable.
      const ad::Var e = (k == 0 && estimates[0]) ? *estimates[0]
                                                  : estimators_[k].forward(est_params_, ad::detach(hk),
                                                                           trainable.estimators);
      fp.l_f.push_back(ad::mse_masked(e, target, hetero_idx_));
    }
  }
  if (with_ld && discri_active_) {
    fp.l_d = ad::binary_cross_entropy(discriminate(enc.representation, trainable.discriminator),
                                      g_.sensitive(), split_.train_idx);
  }
  return fp;
}

void FairsinTrainer::check_finite(double v, std::size_t epoch, const char* term) const {
  if (!std::isfinite(v))
    throw NumericError("non-finite " + std::string(term) + " at epoch " + std::to_string(epoch));
}

double FairsinTrainer::discriminator_loss(const Matrix& representation) {
  ad::Tape tape;
  const ad::Var logits = discriminate(tape.constant(representation), false);
  return ad::binary_cross_entropy(logits, g_.sensitive(), split_.train_idx).value()(0, 0);
}

void FairsinTrainer::discriminator_step(const Matrix& representation) {
  ad::Tape tape;
  const ad::Var loss = ad::binary_cross_entropy(discriminate(tape.constant(representation), true),
                                                g_.sensitive(), split_.train_idx);
  disc_params_.zero_grad();
  tape.backward(loss);
  adam_step(disc_params_, {cfg_.lr_discriminator, cfg_.weight_decay_discriminator});
}

LossReport FairsinTrainer::training_epoch(std::size_t epoch) {
  LossReport report;
  const bool adversarial = discri_active_ && cfg_.adv_weight > 0.0;
  const std::string tag = "epoch " + std::to_string(epoch) + " ";

  if (neutral_active_) {
    trace_.push_back(tag + "step1 estimators");
    ad::Tape tape;
    const ForwardPass fp = forward(tape, {false, true, false}, true, epoch, true, adversarial);
    ad::Var objective = fp.l_f.front();
    for (std::size_t k = 1; k < fp.l_f.size(); ++k) objective = ad::add(objective, fp.l_f[k]);
    if (fp.l_d) objective = ad::sub(objective, ad::scale(*fp.l_d, cfg_.adv_weight));
    for (const ad::Var& lf : fp.l_f) {
      report.l_f.push_back(lf.value()(0, 0));
      check_finite(report.l_f.back(), epoch, "L_F");
    }
    est_params_.zero_grad();
    tape.backward(objective);
    adam_step(est_params_, {cfg_.lr_estimator, cfg_.weight_decay_estimator});
  }

  {
    trace_.push_back(tag + "step2 encoder");
    ad::Tape tape;
    const ForwardPass fp = forward(tape, {true, false, false}, true, epoch, false, adversarial);
    ad::Var objective = fp.l_t;
    if (fp.l_d) objective = ad::sub(objective, ad::scale(*fp.l_d, cfg_.adv_weight));
    report.l_t = fp.l_t.value()(0, 0);
    check_finite(report.l_t, epoch, "L_T");
    enc_params_.zero_grad();
    tape.backward(objective);
    adam_step(enc_params_, {cfg_.lr_encoder, cfg_.weight_decay});
  }

  last_eval_ = evaluate_forward();

  if (discri_active_) {
    trace_.push_back(tag + "step3 discriminator");
    report.l_d = discriminator_loss(last_eval_.representation);
    check_finite(*report.l_d, epoch, "L_D");
    discriminator_step(last_eval_.representation);
  }
  return report;
}

FairsinTrainer::EvalOutput FairsinTrainer::evaluate_forward() {
  ad::Tape tape;
  const ForwardPass fp = forward(tape, {}, false, 0, false, false);
  return {fp.representation.value(), fp.logits.value()};
}

Checkpoint FairsinTrainer::snapshot(std::size_t epoch, double val_acc, const RunMetrics& test) const {
  Checkpoint c;
  c.encoder = enc_cfg_;
  c.in_dim = g_.n_features();
  c.neutralize = cfg_.neutralize;
  c.no_neutral = cfg_.no_neutral;
  c.no_discri = cfg_.no_discri;
  c.encoder_params = enc_params_;
  c.estimator_params = est_params_;
  c.discriminator_params = disc_params_;
  c.epoch = epoch;
  c.val_acc = val_acc;
  c.test = test;
  c.seed = cfg_.seed;
  return c;
}

TrainResult train(const Graph& g, const Split& split, const EncoderConfig& enc,
                  const TrainConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  cfg.validate(enc.n_layers);
  const Graph prepared = prepare_graph(g, cfg);
  FairsinTrainer trainer(prepared, split, enc, cfg);

  TrainResult result;
  double best_val = -1.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = clock::now();
    result.history.push_back(trainer.training_epoch(epoch));
    const Matrix& logits = trainer.last_eval().logits;
    const double val_acc = accuracy(make_predictions(prepared, logits, split.val_idx));
    if (val_acc > best_val) {
      best_val = val_acc;
      const RunMetrics test = evaluate(make_predictions(prepared, logits, split.test_idx), cfg.seed);
      result.best = trainer.snapshot(epoch, val_acc, test);
    }
    result.epoch_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  result.test = result.best.test;
  result.trace = trainer.trace();
  result.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
  return result;
}

Predictions predict(const Graph& g, const Checkpoint& ckpt) {
  const Encoder encoder(ckpt.encoder, ckpt.in_dim);
  const Propagation prop = make_propagation(g, ckpt.encoder.kind);
  ParamStore enc_params = ckpt.encoder_params;
  ParamStore est_params = ckpt.estimator_params;

  const bool neutral = ckpt.neutralize.variant == Variant::FULL && !ckpt.no_neutral && est_params.size() > 0;
  std::vector<Estimator> estimators;
  if (neutral)
    for (std::size_t k = 0; k < ckpt.encoder.n_layers; ++k) estimators.emplace_back(encoder.layer_width(k), k);
  LayerHook hook = identity_hook;
  if (neutral) {
    hook = [&](std::size_t k, ad::Var h) {
      return neutralize(h, estimators[k], est_params, ckpt.neutralize.delta_at(k), false);
    };
  }
  ad::Tape tape;
  ForwardMode mode;
  mode.trainable = false;
  const auto out = encoder.encode(enc_params, prop, tape.constant(g.features()), hook, mode);
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < g.n_nodes(); ++i)
    if (g.label_mask()[i]) labeled.push_back(i);
  return make_predictions(g, encoder.classify(enc_params, out.representation, false).value(), std::move(labeled));
}

}  // namespace fairsin
