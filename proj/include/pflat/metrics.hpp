#pragma once

#include "pflat/information.hpp"
#include "pflat/model.hpp"
#include "pflat/perturbations.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pflat {

enum class LossKind { cross_entropy, zero_one };
enum class DivergenceKind { kl, cross_entropy };

/// The metrics a prompt can be ranked by before adding flatness.
enum class BaseMetric { loss, mi, sen };

std::string_view to_string(LossKind kind);
std::string_view to_string(DivergenceKind kind);
std::string_view to_string(BaseMetric metric);
/// Each throws InvalidArgument on an unknown name.
LossKind parse_loss_kind(std::string_view name);
DivergenceKind parse_divergence_kind(std::string_view name);
BaseMetric parse_base_metric(std::string_view name);

/// MI is the only base where larger is better.
constexpr Direction direction_of(BaseMetric metric) noexcept {
  return metric == BaseMetric::mi ? Direction::higher_better : Direction::lower_better;
}

/// Mean loss of prediction rows against gold label indices.
template <typename Derived>
typename Derived::Scalar loss_from_predictions(const Eigen::MatrixBase<Derived>& predictions,
                                               std::span<const std::size_t> labels, LossKind kind) {
  using S = typename Derived::Scalar;
  S total = 0;
  for (Index i = 0; i < predictions.rows(); ++i) {
    const Index y = static_cast<Index>(labels[static_cast<std::size_t>(i)]);
    if (kind == LossKind::zero_one) {
      total += argmax(predictions.row(i).transpose()) != y ? S(1) : S(0);
    } else {
      total -= std::log(std::max<S>(predictions(i, y), kProbabilityFloor));
    }
  }
  return total / static_cast<S>(predictions.rows());
}

/// Throws EmptyDataset, MissingLabel/UnknownLabel, or NonFiniteLoss.
double prompt_loss(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled,
                   LossKind kind = LossKind::cross_entropy);

/// Throws EmptyDataset.
double mutual_information(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs);

/// Fraction of (input, perturbed prompt) pairs whose argmax differs from the
/// original prompt's argmax. Throws EmptyDataset / EmptyPerturbationSet.
double sensitivity(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs,
                   std::span<const PromptCandidate> perturbed);

/// Mean over inputs and Gaussian samples of div(f_theta, f_{theta+eps}).
/// Each worker perturbs its own clone, so `model` is never modified.
/// Throws EmptyDataset or NonFiniteDivergence.
double pflat(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs,
             const PerturbationConfig& cfg, DivergenceKind div = DivergenceKind::kl, int threads = 1);

/// Same over already encoded inputs.
double pflat_encoded(const ScoringModel& model, std::span<const TokenSequence> inputs, const PerturbationConfig& cfg,
                     DivergenceKind div = DivergenceKind::kl, int threads = 1);

/// ||grad_theta L||_2 of the mean cross-entropy prompt loss.
double true_flatness(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled,
                     int threads = 1);

/// Lower-is-better score: (-base if higher_better else base) + alpha * pflat.
constexpr double combined_score(double base, Direction base_direction, double pflat_value, double alpha) noexcept {
  return (base_direction == Direction::higher_better ? -base : base) + alpha * pflat_value;
}

struct SurrogateGaps {
  /// |MI + L_ce - H(mean prediction)|; the divergence term vanishes at f = y.
  double mi_gap_at_perfect = 0;
  /// |Sen - L_01 - mean_x mean_p' 1[argmax f(x o p') != argmax y]|.
  double sen_gap_at_perfect = 0;
};

/// Checks both surrogate decompositions where they hold exactly: every
/// prediction equals its target row (soft labels allowed). Throws
/// PreconditionNotMet when any row differs by more than 1e-9 in total
/// variation, EmptyPerturbationSet when `perturbed` is empty.
SurrogateGaps surrogate_gap_check(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs,
                                  const Matrix& targets, std::span<const PromptCandidate> perturbed);

/// One-hot targets from gold labels.
SurrogateGaps surrogate_gap_check(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled,
                                  std::span<const PromptCandidate> perturbed);

struct Provenance {
  int n_samples = 0;
  double sigma2 = 0;
  std::uint64_t master_seed = 0;
  LossKind loss_kind = LossKind::cross_entropy;
  DivergenceKind divergence_kind = DivergenceKind::kl;
  std::optional<double> alpha;
  std::optional<BaseMetric> combined_base;

  bool operator==(const Provenance&) const = default;
};

struct MetricReport {
  std::string prompt_id;
  std::optional<double> loss;
  std::optional<double> mi;
  std::optional<double> sen;
  std::optional<double> pflat;
  std::optional<double> true_flatness;
  std::optional<double> combined;
  Provenance provenance;

  /// Value of a base metric; throws InvalidArgument when it was not computed.
  double base(BaseMetric metric) const;

  bool operator==(const MetricReport&) const = default;
};

struct ScoreOptions {
  bool loss = true;
  bool mi = true;
  bool sen = true;
  bool pflat = true;
  bool true_flatness = false;
  LossKind loss_kind = LossKind::cross_entropy;
  DivergenceKind divergence = DivergenceKind::kl;
  PerturbationConfig perturbation;
  /// Its seed is the master for per-prompt sets: each prompt uses
  /// derive_seed(seed, "sensitivity:" + id, 0).
  SensitivitySetConfig sensitivity;
  /// When both are set, `combined` is filled (and pflat forced on if alpha > 0).
  std::optional<double> alpha;
  std::optional<BaseMetric> combined_base;
  int threads = 1;
};

std::vector<PromptCandidate> sensitivity_set_for(const PromptCandidate& p, const Verbalizer& verbalizer,
                                                 const SensitivitySetConfig& cfg);

/// Label-free metrics use `inputs`; loss and true flatness use `labeled`
/// (requested label metrics with an empty `labeled` throw EmptyDataset).
MetricReport score_prompt(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled,
                          const InputSet& inputs, const ScoreOptions& options);

}  // namespace pflat
