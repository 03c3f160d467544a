#include "pflat/flat_prefix.hpp"

#include "pflat/gradient.hpp"
#include "pflat/information.hpp"
#include "pflat/random.hpp"

namespace pflat {

void SamConfig::validate() const {
  if (use_flatness && !(rho > 0)) throw Error(ErrorCode::InvalidConfig, "rho must be positive when flatness is on");
  if (!(learning_rate > 0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
  if (epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be non-negative");
  if (prefix_len < 1) throw Error(ErrorCode::InvalidConfig, "prefix_len must be positive");
  if (!(init_scale >= 0)) throw Error(ErrorCode::InvalidConfig, "init_scale must be non-negative");
  if (!(grad_norm_floor > 0)) throw Error(ErrorCode::InvalidConfig, "grad_norm_floor must be positive");
}

PrefixParameters initial_prefix(const ScoringModel& model, const SamConfig& cfg) {
  cfg.validate();
  PrefixParameters prefix(cfg.prefix_len, model.prefix_width());
  Rng rng(derive_seed(cfg.seed, "prefix-init", 0));
  std::normal_distribution<double> normal(0.0, cfg.init_scale);
  // Row-major fill so the draw order does not depend on Eigen's storage.
  for (Index r = 0; r < prefix.rows(); ++r) {
    for (Index c = 0; c < prefix.cols(); ++c) prefix(r, c) = cfg.init_scale > 0 ? normal(rng) : 0.0;
  }
  return prefix;
}

PrefixTuneResult prefix_tune(const ScoringModel& model, const LabeledSet& train, const SamConfig& cfg, int threads) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "prefix tuning on an empty training set");
  const auto labels = label_indices(train, model.verbalizer());
  std::vector<TokenSequence> tokens;
  tokens.reserve(train.size());
  for (const auto& ex : train) tokens.push_back(model.tokenize(ex.text));

  PrefixTuneResult result{initial_prefix(model, cfg), {}};
  if (!model.capabilities().analytic_gradient && result.prefix.size() > kMaxFiniteDifferencePrefix) {
    throw Error(ErrorCode::PrefixTooLargeForFiniteDiff,
                std::to_string(result.prefix.size()) + " prefix entries exceed the finite-difference limit of " +
                    std::to_string(kMaxFiniteDifferencePrefix));
  }
  auto grad_fn = [&](const PrefixParameters& at) { return prefix_loss_gradient(model, tokens, labels, at, threads); };
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto step = sam_update(result.prefix, grad_fn, cfg);
    result.history.push_back({epoch, step.loss, step.grad_norm});
    result.prefix = std::move(step.prefix);
  }
  return result;
}

double prefix_accuracy(const ScoringModel& model, const PrefixParameters& prefix, const LabeledSet& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyDataset, "accuracy over an empty test set");
  const auto labels = label_indices(test, model.verbalizer());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (argmax(model.label_probs(model.tokenize(test[i].text), &prefix)) == static_cast<Index>(labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace pflat
