#pragma once

#include "pflat/model.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace pflat {

struct LogisticBagConfig {
  int vocab_size = 1024;  // hashed feature buckets, >= 64
  double l2 = 1e-3;
  int train_epochs = 500;
  double learning_rate = 1.0;
  std::uint64_t seed = 0;
  double init_scale = 0.01;
  /// Stop early once the regularized gradient norm falls to this value.
  double grad_tol = 0.0;

  void validate() const;
};

/// Bucket -> count, sorted by bucket.
using SparseFeatures = std::vector<std::pair<TokenId, Scalar>>;

/// Softmax classifier over hashed token counts:
///   p(label | text) = softmax(W phi(text) + b)
/// Parameters are W (labels x vocab, row-major) followed by b.
///
/// A prefix enters as an additive feature-space bias: its rows are summed
/// into one vocab-sized vector v and the logits become W (phi + v) + b.
class LogisticBagModel final : public ScoringModel {
 public:
  static constexpr std::string_view kBackend = "logistic_bag";

  LogisticBagModel(Verbalizer verbalizer, int vocab_size);

  std::unique_ptr<ScoringModel> clone() const override;
  std::string_view backend_name() const override { return kBackend; }
  Capabilities capabilities() const override { return {.analytic_gradient = true}; }

  TokenSequence tokenize(std::string_view text) const override;
  Vector label_probs(const TokenSequence& tokens, const PrefixParameters* prefix = nullptr) const override;
  Index prefix_width() const override { return vocab_size_; }

  ParameterVector analytic_loss_gradient(std::span<const TokenSequence> inputs,
                                         std::span<const std::size_t> labels) const override;
  std::pair<double, PrefixParameters> analytic_prefix_gradient(std::span<const TokenSequence> inputs,
                                                               std::span<const std::size_t> labels,
                                                               const PrefixParameters& prefix) const override;

  void save(const std::filesystem::path& path) const override;
  /// Throws FormatError / ShapeMismatch.
  static LogisticBagModel load(const std::filesystem::path& path, const Verbalizer& verbalizer);

  int vocab_size() const noexcept { return vocab_size_; }
  SparseFeatures features(const TokenSequence& tokens) const;
  Vector logits(const SparseFeatures& phi, const PrefixParameters* prefix = nullptr) const;

  using WeightMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  WeightMap weights() const;
  Eigen::Map<const Vector> bias() const;

 private:
  int vocab_size_;
};

struct LogisticFit {
  LogisticBagModel model;
  /// Regularized training objective before each epoch and after the last.
  std::vector<double> loss_history;
  double final_grad_norm = 0.0;
  /// Step actually taken: min(learning_rate, 1 / smoothness bound).
  double step_size = 0.0;
};

/// Full-batch gradient descent on mean cross-entropy + (l2/2)||theta||^2 over
/// the raw example texts. Throws MissingLabel when a verbalizer label has no
/// training example.
LogisticFit fit_logistic(const LabeledSet& train, const Verbalizer& verbalizer, const LogisticBagConfig& cfg);

}  // namespace pflat
