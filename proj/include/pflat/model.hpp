#pragma once

#include "pflat/core.hpp"
#include "pflat/prompt.hpp"
#include "pflat/tokenizer.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pflat {

struct Capabilities {
  bool analytic_gradient = false;
};

/// Label distribution for one rendered prompt and input.
struct PredictionDistribution {
  std::vector<std::string> labels;
  Vector probs;

  double operator[](std::string_view label) const;
};

/// A differentiable model that scores prompt∘input with a distribution over
/// the verbalizer labels and exposes its parameters as one flat vector.
///
/// Const member functions are safe to call concurrently. set_params needs
/// exclusive access; perturbation code clones the model per worker instead
/// of mutating a shared instance.
class ScoringModel {
 public:
  virtual ~ScoringModel() = default;

  virtual std::unique_ptr<ScoringModel> clone() const = 0;
  virtual std::string_view backend_name() const = 0;
  virtual Capabilities capabilities() const = 0;

  const Verbalizer& verbalizer() const noexcept { return verbalizer_; }
  std::size_t label_count() const noexcept { return verbalizer_.size(); }

  Index param_count() const noexcept { return params_.size(); }
  const ParameterVector& params() const noexcept { return params_; }
  ParameterVector get_params() const { return params_; }
  /// Throws DimensionMismatch or NonFiniteParameters.
  void set_params(const ParameterVector& values);

  virtual TokenSequence tokenize(std::string_view text) const = 0;

  /// Probabilities in verbalizer order. `prefix`, when given, is a continuous
  /// prompt with prefix_width() columns.
  virtual Vector label_probs(const TokenSequence& tokens, const PrefixParameters* prefix = nullptr) const = 0;

  virtual Index prefix_width() const = 0;

  /// Mean cross-entropy gradient with respect to the parameters. Only
  /// backends with analytic_gradient implement it.
  virtual ParameterVector analytic_loss_gradient(std::span<const TokenSequence> inputs,
                                                 std::span<const std::size_t> labels) const;

  /// Mean cross-entropy and its gradient with respect to the prefix.
  virtual std::pair<double, PrefixParameters> analytic_prefix_gradient(std::span<const TokenSequence> inputs,
                                                                       std::span<const std::size_t> labels,
                                                                       const PrefixParameters& prefix) const;

  virtual void save(const std::filesystem::path& path) const = 0;

 protected:
  ScoringModel(Verbalizer verbalizer, Index param_count);
  ScoringModel(const ScoringModel&) = default;
  ScoringModel& operator=(const ScoringModel&) = default;

  /// Called after params_ changes so backends can refresh derived views.
  virtual void on_params_changed() {}

  ParameterVector params_;

 private:
  Verbalizer verbalizer_;
};

/// Tokens of render(prompt, verbalizer, input).
TokenSequence encode(const ScoringModel& model, const PromptCandidate& prompt, std::string_view input);
std::vector<TokenSequence> encode_all(const ScoringModel& model, const PromptCandidate& prompt,
                                      const InputSet& inputs);

Vector predict_probs(const ScoringModel& model, const PromptCandidate& prompt, std::string_view input);
PredictionDistribution predict(const ScoringModel& model, const PromptCandidate& prompt, std::string_view input);

/// One prediction row per input (N x |labels|).
Matrix predict_matrix(const ScoringModel& model, const PromptCandidate& prompt, const InputSet& inputs);

/// Reads the backend from the weight-file header and loads it.
std::unique_ptr<ScoringModel> load_model(const std::filesystem::path& path, const Verbalizer& verbalizer);

}  // namespace pflat
