#pragma once

#include "pflat/error.hpp"
#include "pflat/metrics.hpp"
#include "pflat/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pflat {

/// Fraction of examples whose argmax equals the gold label. Throws
/// EmptyDataset.
double accuracy(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& test);

namespace detail {

template <typename DX, typename DY>
void check_correlation_input(const Eigen::MatrixBase<DX>& xs, const Eigen::MatrixBase<DY>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::LengthMismatch, "correlation inputs differ in length");
  if (xs.size() < 3) throw Error(ErrorCode::DegenerateInput, "correlation needs at least 3 pairs");
  if (xs.maxCoeff() == xs.minCoeff()) throw Error(ErrorCode::DegenerateInput, "first input is constant");
  if (ys.maxCoeff() == ys.minCoeff()) throw Error(ErrorCode::DegenerateInput, "second input is constant");
}

}  // namespace detail

/// Product-moment correlation. Throws LengthMismatch or DegenerateInput.
template <typename DX, typename DY>
typename DX::Scalar pearson(const Eigen::MatrixBase<DX>& xs, const Eigen::MatrixBase<DY>& ys) {
  using S = typename DX::Scalar;
  detail::check_correlation_input(xs, ys);
  const auto dx = (xs.array() - xs.mean()).matrix();
  const auto dy = (ys.array() - ys.mean()).matrix();
  const S r = dx.dot(dy) / std::sqrt(dx.squaredNorm() * dy.squaredNorm());
  return std::clamp<S>(r, -1, 1);
}

/// 1-based ranks; tied values share the average of their positions.
template <typename Derived>
VectorX<typename Derived::Scalar> average_ranks(const Eigen::MatrixBase<Derived>& values) {
  using S = typename Derived::Scalar;
  const Index n = values.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) < values(b); });
  VectorX<S> ranks(n);
  for (Index i = 0; i < n;) {
    Index j = i;
    while (j + 1 < n && values(order[static_cast<std::size_t>(j + 1)]) == values(order[static_cast<std::size_t>(i)])) ++j;
    const S rank = S(i + j + 2) / 2;
    for (Index t = i; t <= j; ++t) ranks(order[static_cast<std::size_t>(t)]) = rank;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of average ranks.
template <typename DX, typename DY>
typename DX::Scalar spearman(const Eigen::MatrixBase<DX>& xs, const Eigen::MatrixBase<DY>& ys) {
  detail::check_correlation_input(xs, ys);
  return pearson(average_ranks(xs), average_ranks(ys));
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  using Map = Eigen::Map<const Vector>;
  return pearson(Map(xs.data(), static_cast<Index>(xs.size())), Map(ys.data(), static_cast<Index>(ys.size())));
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  using Map = Eigen::Map<const Vector>;
  return spearman(Map(xs.data(), static_cast<Index>(xs.size())), Map(ys.data(), static_cast<Index>(ys.size())));
}

/// DCG@k / IDCG@k with linear gain and log2(i + 1) discount; 0 when IDCG is
/// 0. Throws BadK, NegativeRelevance, LengthMismatch.
double ndcg_at_k(std::span<const double> ranked_relevances, std::span<const double> ideal_relevances, int k);

/// selected / best. Throws ZeroBest, SelectedExceedsBest, InvalidArgument
/// (negative selected).
double rate(double selected_perf, double best_perf);

/// Names accepted in StudyConfig::metrics: loss, mi, sen, pflat, and
/// loss+pflat, mi+pflat, sen+pflat.
struct MetricSpec {
  std::optional<BaseMetric> base;
  bool with_pflat = false;

  std::string name() const;
  bool operator==(const MetricSpec&) const = default;
};

/// Throws InvalidArgument.
MetricSpec parse_metric_spec(std::string_view name);

struct StudyConfig {
  std::vector<std::string> metrics = {"loss", "mi", "sen", "pflat", "loss+pflat", "mi+pflat", "sen+pflat"};
  double alpha = 1.0;
  LossKind loss_kind = LossKind::cross_entropy;
  DivergenceKind divergence = DivergenceKind::kl;
  PerturbationConfig perturbation;
  SensitivitySetConfig sensitivity;
  int threads = 1;

  bool operator==(const StudyConfig&) const = default;
};

struct PromptRow {
  std::string prompt_id;
  double accuracy = 0;
  MetricReport metrics;

  bool operator==(const PromptRow&) const = default;
};

/// A null value carries the reason it could not be computed.
struct CorrelationEntry {
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<std::string> reason;

  bool operator==(const CorrelationEntry&) const = default;
};

struct RankingEntry {
  std::string selected;
  double ndcg1 = 0;
  double ndcg3 = 0;
  std::optional<double> rate;
  std::optional<std::string> reason;

  bool operator==(const RankingEntry&) const = default;
};

struct EvaluationReport {
  std::vector<PromptRow> per_prompt;
  std::map<std::string, CorrelationEntry> correlations;
  std::map<std::string, RankingEntry> ranking;
  StudyConfig config;

  bool operator==(const EvaluationReport&) const = default;
};

/// Lower-is-better selection score of one metric for one prompt.
double selection_score(const MetricReport& report, const MetricSpec& spec, double alpha);

/// Correlations and ranking measures from per-prompt rows; pure, so tests
/// can recompute it from the rows alone.
void summarize(EvaluationReport& report);

/// Label-free metrics on the test inputs, accuracy on the test labels. The
/// prompt loss uses `loss_labels` when given (e.g. a dev set), otherwise the
/// test labels. Deterministic for a given master seed at any thread count.
EvaluationReport correlation_study(const ScoringModel& model, const PromptPool& pool, const LabeledSet& test,
                                   const StudyConfig& config, const LabeledSet* loss_labels = nullptr);

enum class SweepVariable { sigma2, n_samples };

std::string_view to_string(SweepVariable variable);
SweepVariable parse_sweep_variable(std::string_view name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::sigma2;
  std::vector<double> values;
  int repeats = 1;

  /// Throws InvalidConfig.
  void validate() const;
};

struct SweepRow {
  double value = 0;
  int repeat = 0;
  /// Means over the pflat-based metrics (all metrics if none use pflat);
  /// null entries are skipped.
  std::optional<double> mean_rate;
  std::optional<double> mean_pearson;
  /// Mean pFlat estimate over the pool.
  std::optional<double> mean_pflat;

  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<EvaluationReport> cells;
};

/// Seed of a sweep repeat: the master seed itself for repeat 0.
std::uint64_t sweep_repeat_seed(std::uint64_t master, int repeat);

/// One correlation_study per (value, repeat), in that order.
SweepResult sweep(const ScoringModel& model, const PromptPool& pool, const LabeledSet& test, const StudyConfig& base,
                  const SweepSpec& spec, const LabeledSet* loss_labels = nullptr);

}  // namespace pflat
