#include "pflat/gradient.hpp"

#include "pflat/error.hpp"
#include "pflat/parallel.hpp"

#include <cmath>

namespace pflat {

double mean_cross_entropy(const ScoringModel& model, std::span<const TokenSequence> inputs,
                          std::span<const std::size_t> labels, const PrefixParameters* prefix) {
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "loss over an empty dataset");
  if (inputs.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "inputs and labels differ in length");
  double total = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const double p = model.label_probs(inputs[i], prefix)(static_cast<Index>(labels[i]));
    if (std::isnan(p)) throw Error(ErrorCode::NonFiniteLoss, "gold-label probability is NaN");
    total -= std::log(std::max(p, kProbabilityFloor));
  }
  return total / static_cast<double>(inputs.size());
}

ParameterVector grad_loss(const ScoringModel& model, std::span<const TokenSequence> inputs,
                          std::span<const std::size_t> labels, int threads) {
  if (model.capabilities().analytic_gradient) return model.analytic_loss_gradient(inputs, labels);
  const Index dim = model.param_count();
  if (dim > kMaxFiniteDifferenceParams) {
    throw Error(ErrorCode::TooManyParamsForFiniteDiff,
                std::to_string(dim) + " parameters exceed the finite-difference limit of " +
                    std::to_string(kMaxFiniteDifferenceParams));
  }
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "gradient over an empty dataset");
  ParameterVector grad(dim);
  const ParameterVector theta = model.params();
  parallel_blocks(static_cast<std::size_t>(dim), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    auto local = model.clone();
    ParameterVector shifted = theta;
    for (std::size_t j = begin; j < end; ++j) {
      const Index idx = static_cast<Index>(j);
      shifted(idx) = theta(idx) + kFiniteDifferenceStep;
      local->set_params(shifted);
      const double up = mean_cross_entropy(*local, inputs, labels);
      shifted(idx) = theta(idx) - kFiniteDifferenceStep;
      local->set_params(shifted);
      const double down = mean_cross_entropy(*local, inputs, labels);
      shifted(idx) = theta(idx);
      grad(idx) = (up - down) / (2 * kFiniteDifferenceStep);
    }
  });
  return grad;
}

ParameterVector grad_prompt_loss(const ScoringModel& model, const PromptCandidate& prompt, const LabeledSet& labeled,
                                 int threads) {
  if (labeled.empty()) throw Error(ErrorCode::EmptyDataset, "gradient over an empty dataset");
  const auto labels = label_indices(labeled, model.verbalizer());
  const auto tokens = encode_all(model, prompt, inputs_of(labeled));
  return grad_loss(model, tokens, labels, threads);
}

std::pair<double, PrefixParameters> prefix_loss_gradient(const ScoringModel& model,
                                                         std::span<const TokenSequence> inputs,
                                                         std::span<const std::size_t> labels,
                                                         const PrefixParameters& prefix, int threads) {
  if (prefix.cols() != model.prefix_width()) {
    throw Error(ErrorCode::DimensionMismatch, "prefix width does not match the backend");
  }
  if (model.capabilities().analytic_gradient) return model.analytic_prefix_gradient(inputs, labels, prefix);
  if (prefix.size() > kMaxFiniteDifferencePrefix) {
    throw Error(ErrorCode::PrefixTooLargeForFiniteDiff,
                std::to_string(prefix.size()) + " prefix entries exceed the finite-difference limit of " +
                    std::to_string(kMaxFiniteDifferencePrefix));
  }
  const double loss = mean_cross_entropy(model, inputs, labels, &prefix);
  PrefixParameters grad(prefix.rows(), prefix.cols());
  parallel_blocks(static_cast<std::size_t>(prefix.size()), threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    PrefixParameters shifted = prefix;
                    for (std::size_t j = begin; j < end; ++j) {
                      const Index idx = static_cast<Index>(j);
                      const Scalar original = prefix(idx);
                      shifted(idx) = original + kFiniteDifferenceStep;
                      const double up = mean_cross_entropy(model, inputs, labels, &shifted);
                      shifted(idx) = original - kFiniteDifferenceStep;
                      const double down = mean_cross_entropy(model, inputs, labels, &shifted);
                      shifted(idx) = original;
                      grad(idx) = (up - down) / (2 * kFiniteDifferenceStep);
                    }
                  });
  return {loss, grad};
}

}  // namespace pflat
