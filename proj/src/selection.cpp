#include "pflat/selection.hpp"

#include "pflat/error.hpp"

#include <algorithm>
#include <cmath>

namespace pflat {

std::vector<std::string> rank_prompts(const ScoreMap& scores, Direction direction) {
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "no scores to rank");
  std::vector<std::pair<std::string, double>> entries(scores.begin(), scores.end());
  for (const auto& [id, score] : entries) {
    if (!std::isfinite(score)) throw Error(ErrorCode::NonFiniteScore, "score of '" + id + "' is not finite");
  }
  // Entries arrive in id order, so a stable sort breaks ties by id.
  std::stable_sort(entries.begin(), entries.end(), [direction](const auto& a, const auto& b) {
    return direction == Direction::lower_better ? a.second < b.second : a.second > b.second;
  });
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (auto& e : entries) ids.push_back(std::move(e.first));
  return ids;
}

std::string select_best(const PromptPool& pool, const ScoreMap& scores, Direction direction) {
  ScoreMap restricted;
  for (const auto& p : pool.prompts) {
    const auto it = scores.find(p.id);
    if (it == scores.end()) throw Error(ErrorCode::InvalidArgument, "no score for prompt '" + p.id + "'");
    restricted.emplace(p.id, it->second);
  }
  return rank_prompts(restricted, direction).front();
}

ScoreMap combine_scores(const ScoreMap& base, Direction base_direction, const ScoreMap& pflat, double alpha) {
  ScoreMap out;
  for (const auto& [id, value] : base) {
    double flat = 0;
    if (alpha != 0) {
      const auto it = pflat.find(id);
      if (it == pflat.end()) throw Error(ErrorCode::InvalidArgument, "no pflat value for prompt '" + id + "'");
      flat = it->second;
    }
    out.emplace(id, combined_score(value, base_direction, flat, alpha));
  }
  return out;
}

void AlphaGrid::validate() const {
  if (values.empty()) throw Error(ErrorCode::EmptyGrid, "alpha grid is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0) || !std::isfinite(values[i])) {
      throw Error(ErrorCode::InvalidConfig, "alpha values must be finite and >= 0");
    }
    if (i > 0 && !(values[i] > values[i - 1])) throw Error(ErrorCode::InvalidConfig, "alpha grid must be strictly ascending");
  }
}

AlphaTuning tune_alpha_from_scores(const ScoreMap& base, Direction base_direction, const ScoreMap& pflat,
                                   const ScoreMap& accuracy, const AlphaGrid& grid) {
  grid.validate();
  AlphaTuning result;
  for (double alpha : grid.values) {
    const std::string selected = rank_prompts(combine_scores(base, base_direction, pflat, alpha), Direction::lower_better).front();
    const auto it = accuracy.find(selected);
    if (it == accuracy.end()) throw Error(ErrorCode::InvalidArgument, "no accuracy for prompt '" + selected + "'");
    result.trials.push_back({alpha, selected, it->second});
  }
  const auto best = std::max_element(result.trials.begin(), result.trials.end(),
                                     [](const AlphaTrial& a, const AlphaTrial& b) { return a.dev_accuracy < b.dev_accuracy; });
  result.alpha = best->alpha;
  result.dev_accuracy = best->dev_accuracy;
  return result;
}

AlphaTuning tune_alpha(const ScoringModel& model, const PromptPool& pool, const LabeledSet& dev,
                       const TuneOptions& options) {
  options.grid.validate();
  pool.validate();
  const auto labels = label_indices(dev, model.verbalizer());
  for (std::size_t k = 0; k < model.label_count(); ++k) {
    if (std::find(labels.begin(), labels.end(), k) == labels.end()) {
      throw Error(ErrorCode::MissingLabel, "dev set has no example labeled '" + model.verbalizer().label(k) + "'");
    }
  }

  const bool need_pflat = std::any_of(options.grid.values.begin(), options.grid.values.end(), [](double a) { return a > 0; });
  ScoreOptions score;
  score.loss = options.base == BaseMetric::loss;
  score.mi = options.base == BaseMetric::mi;
  score.sen = options.base == BaseMetric::sen;
  score.pflat = need_pflat;
  score.divergence = options.divergence;
  score.perturbation = options.perturbation;
  score.sensitivity = options.sensitivity;
  score.threads = options.threads;

  const InputSet inputs = inputs_of(dev);
  ScoreMap base, flat, accuracy;
  for (const auto& p : pool.prompts) {
    const MetricReport report = score_prompt(model, p, dev, inputs, score);
    base.emplace(p.id, report.base(options.base));
    if (report.pflat) flat.emplace(p.id, *report.pflat);
    accuracy.emplace(p.id, 1.0 - prompt_loss(model, p, dev, LossKind::zero_one));
  }
  return tune_alpha_from_scores(base, direction_of(options.base), flat, accuracy, options.grid);
}

}  // namespace pflat
