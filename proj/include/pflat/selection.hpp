#pragma once

#include "pflat/metrics.hpp"

#include <map>
#include <string>
#include <vector>

namespace pflat {

/// Prompt id -> score. Ordered by id, which is also the tie-break order.
using ScoreMap = std::map<std::string, double, std::less<>>;

/// Best first; ties by ascending id. Throws InvalidArgument (empty) or
/// NonFiniteScore.
std::vector<std::string> rank_prompts(const ScoreMap& scores, Direction direction);

/// Head of rank_prompts over the pool's ids. Throws InvalidArgument when a
/// pool prompt has no score.
std::string select_best(const PromptPool& pool, const ScoreMap& scores, Direction direction);

/// Lower-is-better combined score per prompt.
ScoreMap combine_scores(const ScoreMap& base, Direction base_direction, const ScoreMap& pflat, double alpha);

struct AlphaGrid {
  std::vector<double> values = {0, 0.01, 0.03, 0.1, 0.3, 1, 3, 10};

  /// Throws EmptyGrid, or InvalidConfig when not strictly ascending and >= 0.
  void validate() const;
};

struct AlphaTrial {
  double alpha = 0;
  std::string selected;
  double dev_accuracy = 0;
};

struct AlphaTuning {
  double alpha = 0;
  double dev_accuracy = 0;
  std::vector<AlphaTrial> trials;
};

/// For each alpha, selects by combine_scores and looks up the selected
/// prompt's accuracy; returns the alpha with the highest accuracy (ties go
/// to the smallest alpha).
AlphaTuning tune_alpha_from_scores(const ScoreMap& base, Direction base_direction, const ScoreMap& pflat,
                                   const ScoreMap& accuracy, const AlphaGrid& grid);

struct TuneOptions {
  BaseMetric base = BaseMetric::loss;
  AlphaGrid grid;
  PerturbationConfig perturbation;
  DivergenceKind divergence = DivergenceKind::kl;
  SensitivitySetConfig sensitivity;
  int threads = 1;
};

/// All metrics on dev: loss on the labeled dev set, MI/Sen/pFlat on its
/// inputs. Throws EmptyGrid, MissingLabel (a label without dev examples),
/// or whatever the metrics throw.
AlphaTuning tune_alpha(const ScoringModel& model, const PromptPool& pool, const LabeledSet& dev,
                       const TuneOptions& options);

}  // namespace pflat
