#pragma once

#include "pflat/model.hpp"

#include <span>

namespace pflat {

inline constexpr Scalar kFiniteDifferenceStep = 1e-5;
inline constexpr Index kMaxFiniteDifferenceParams = 5000;
inline constexpr Index kMaxFiniteDifferencePrefix = 1000;

/// Mean of -log max(p[y], floor). Throws EmptyDataset, LengthMismatch, or
/// NonFiniteLoss when a gold probability is NaN.
double mean_cross_entropy(const ScoringModel& model, std::span<const TokenSequence> inputs,
                          std::span<const std::size_t> labels, const PrefixParameters* prefix = nullptr);

/// Gradient of the mean cross-entropy prompt loss with respect to theta.
/// Analytic when the backend supports it, otherwise central differences with
/// step kFiniteDifferenceStep (TooManyParamsForFiniteDiff above
/// kMaxFiniteDifferenceParams).
ParameterVector grad_prompt_loss(const ScoringModel& model, const PromptCandidate& prompt, const LabeledSet& labeled,
                                 int threads = 1);

/// Same over pre-encoded inputs.
ParameterVector grad_loss(const ScoringModel& model, std::span<const TokenSequence> inputs,
                          std::span<const std::size_t> labels, int threads = 1);

/// Mean cross-entropy and its gradient with respect to the prefix. Finite
/// differences over prefix entries only when the backend has no analytic
/// form (PrefixTooLargeForFiniteDiff above kMaxFiniteDifferencePrefix).
std::pair<double, PrefixParameters> prefix_loss_gradient(const ScoringModel& model,
                                                         std::span<const TokenSequence> inputs,
                                                         std::span<const std::size_t> labels,
                                                         const PrefixParameters& prefix, int threads = 1);

}  // namespace pflat
