#include "pflat/evaluation.hpp"

#include "pflat/parallel.hpp"
#include "pflat/random.hpp"

namespace pflat {

double accuracy(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyDataset, "accuracy over an empty test set");
  return 1.0 - prompt_loss(model, p, test, LossKind::zero_one);
}

double ndcg_at_k(std::span<const double> ranked_relevances, std::span<const double> ideal_relevances, int k) {
  if (ranked_relevances.size() != ideal_relevances.size()) {
    throw Error(ErrorCode::LengthMismatch, "ranked and ideal relevances differ in length");
  }
  if (k < 1 || static_cast<std::size_t>(k) > ranked_relevances.size()) {
    throw Error(ErrorCode::BadK, "k = " + std::to_string(k) + " outside [1, " +
                                     std::to_string(ranked_relevances.size()) + "]");
  }
  auto negative = [](double r) { return r < 0; };
  if (std::any_of(ranked_relevances.begin(), ranked_relevances.end(), negative) ||
      std::any_of(ideal_relevances.begin(), ideal_relevances.end(), negative)) {
    throw Error(ErrorCode::NegativeRelevance, "relevances must be non-negative");
  }
  double dcg = 0;
  double idcg = 0;
  for (int i = 0; i < k; ++i) {
    const double discount = std::log2(static_cast<double>(i) + 2);
    dcg += ranked_relevances[static_cast<std::size_t>(i)] / discount;
    idcg += ideal_relevances[static_cast<std::size_t>(i)] / discount;
  }
  return idcg == 0 ? 0.0 : dcg / idcg;
}

double rate(double selected_perf, double best_perf) {
  if (!(best_perf > 0)) throw Error(ErrorCode::ZeroBest, "best performance must be positive");
  if (selected_perf < 0) throw Error(ErrorCode::InvalidArgument, "selected performance must be non-negative");
  if (selected_perf > best_perf) throw Error(ErrorCode::SelectedExceedsBest, "selected performance exceeds the best");
  return selected_perf / best_perf;
}

std::string MetricSpec::name() const {
  if (!base) return "pflat";
  std::string n(to_string(*base));
  return with_pflat ? n + "+pflat" : n;
}

MetricSpec parse_metric_spec(std::string_view name) {
  if (name == "pflat") return {std::nullopt, true};
  constexpr std::string_view kSuffix = "+pflat";
  if (name.ends_with(kSuffix)) return {parse_base_metric(name.substr(0, name.size() - kSuffix.size())), true};
  return {parse_base_metric(name), false};
}

double selection_score(const MetricReport& report, const MetricSpec& spec, double alpha) {
  auto flat = [&] {
    if (!report.pflat) throw Error(ErrorCode::InvalidArgument, "pflat was not computed for " + report.prompt_id);
    return *report.pflat;
  };
  if (!spec.base) return flat();
  const double base = report.base(*spec.base);
  if (!spec.with_pflat) return combined_score(base, direction_of(*spec.base), 0.0, 0.0);
  return combined_score(base, direction_of(*spec.base), flat(), alpha);
}

void summarize(EvaluationReport& report) {
  report.correlations.clear();
  report.ranking.clear();
  const std::size_t n = report.per_prompt.size();
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < n; ++i) acc[i] = report.per_prompt[i].accuracy;
  std::vector<double> ideal = acc;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double best = ideal.empty() ? 0.0 : ideal.front();

  for (const auto& name : report.config.metrics) {
    const MetricSpec spec = parse_metric_spec(name);
    ScoreMap scores;
    std::vector<double> goodness(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = selection_score(report.per_prompt[i].metrics, spec, report.config.alpha);
      scores.emplace(report.per_prompt[i].prompt_id, s);
      // Scores are lower-is-better, so their negation should track accuracy.
      goodness[i] = -s;
    }

    CorrelationEntry corr;
    try {
      corr.pearson = pearson(goodness, acc);
      corr.spearman = spearman(goodness, acc);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateInput) throw;
      corr = {std::nullopt, std::nullopt, e.what()};
    }
    report.correlations[name] = corr;

    RankingEntry rank;
    const auto order = rank_prompts(scores, Direction::lower_better);
    std::vector<double> ranked;
    for (const auto& id : order) {
      const auto it = std::find_if(report.per_prompt.begin(), report.per_prompt.end(),
                                   [&](const PromptRow& r) { return r.prompt_id == id; });
      ranked.push_back(it->accuracy);
    }
    rank.selected = order.front();
    rank.ndcg1 = ndcg_at_k(ranked, ideal, 1);
    rank.ndcg3 = ndcg_at_k(ranked, ideal, std::min<int>(3, static_cast<int>(n)));
    try {
      rank.rate = rate(ranked.front(), best);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroBest) throw;
      rank.reason = e.what();
    }
    report.ranking[name] = rank;
  }
}

EvaluationReport correlation_study(const ScoringModel& model, const PromptPool& pool, const LabeledSet& test,
                                   const StudyConfig& config, const LabeledSet* loss_labels) {
  pool.validate();
  if (pool.prompts.size() < 3) throw Error(ErrorCode::InvalidArgument, "a correlation study needs at least 3 prompts");
  if (test.empty()) throw Error(ErrorCode::EmptyDataset, "empty test set");
  config.perturbation.validate();

  ScoreOptions options;
  options.loss = options.mi = options.sen = options.pflat = false;
  for (const auto& name : config.metrics) {
    const MetricSpec spec = parse_metric_spec(name);
    if (spec.with_pflat) options.pflat = true;
    if (spec.base == BaseMetric::loss) options.loss = true;
    if (spec.base == BaseMetric::mi) options.mi = true;
    if (spec.base == BaseMetric::sen) options.sen = true;
  }
  options.loss_kind = config.loss_kind;
  options.divergence = config.divergence;
  options.perturbation = config.perturbation;
  options.sensitivity = config.sensitivity;
  options.threads = 1;

  const InputSet inputs = inputs_of(test);
  const LabeledSet& loss_set = loss_labels ? *loss_labels : test;
  EvaluationReport report;
  report.config = config;
  report.per_prompt.resize(pool.prompts.size());
  // One prompt per task; each slot is written by exactly one worker.
  parallel_for(pool.prompts.size(), config.threads, [&](std::size_t i) {
    const auto& p = pool.prompts[i];
    report.per_prompt[i] = {p.id, accuracy(model, p, test), score_prompt(model, p, loss_set, inputs, options)};
  });
  std::sort(report.per_prompt.begin(), report.per_prompt.end(),
            [](const PromptRow& a, const PromptRow& b) { return a.prompt_id < b.prompt_id; });
  summarize(report);
  return report;
}

std::string_view to_string(SweepVariable variable) {
  return variable == SweepVariable::sigma2 ? "sigma2" : "n_samples";
}

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "sigma2") return SweepVariable::sigma2;
  if (name == "n_samples") return SweepVariable::n_samples;
  throw Error(ErrorCode::InvalidArgument, "unknown sweep variable '" + std::string(name) + "'");
}

void SweepSpec::validate() const {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one value");
  if (repeats < 1) throw Error(ErrorCode::InvalidConfig, "repeats must be >= 1");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw Error(ErrorCode::InvalidConfig, "sweep values must be strictly ascending");
  }
  for (double v : values) {
    if (variable == SweepVariable::n_samples && (v < 1 || v != std::floor(v))) {
      throw Error(ErrorCode::InvalidConfig, "n_samples values must be positive integers");
    }
    if (variable == SweepVariable::sigma2 && !(v >= 0)) throw Error(ErrorCode::InvalidConfig, "sigma2 values must be >= 0");
  }
}

std::uint64_t sweep_repeat_seed(std::uint64_t master, int repeat) {
  return repeat == 0 ? master : derive_seed(master, "sweep-repeat", static_cast<std::uint64_t>(repeat));
}

SweepResult sweep(const ScoringModel& model, const PromptPool& pool, const LabeledSet& test, const StudyConfig& base,
                  const SweepSpec& spec, const LabeledSet* loss_labels) {
  spec.validate();
  SweepResult result;
  for (double value : spec.values) {
    for (int r = 0; r < spec.repeats; ++r) {
      StudyConfig cfg = base;
      if (spec.variable == SweepVariable::sigma2) {
        cfg.perturbation.sigma2 = value;
      } else {
        cfg.perturbation.n_samples = static_cast<int>(value);
      }
      const std::uint64_t seed = sweep_repeat_seed(base.perturbation.master_seed, r);
      cfg.perturbation.master_seed = seed;
      cfg.sensitivity.seed = sweep_repeat_seed(base.sensitivity.seed, r);
      EvaluationReport cell = correlation_study(model, pool, test, cfg, loss_labels);

      std::vector<std::string> chosen;
      for (const auto& name : cfg.metrics) {
        if (parse_metric_spec(name).with_pflat) chosen.push_back(name);
      }
      if (chosen.empty()) chosen = cfg.metrics;
      double rate_sum = 0, pearson_sum = 0, pflat_sum = 0;
      int rate_n = 0, pearson_n = 0, pflat_n = 0;
      for (const auto& name : chosen) {
        if (const auto& e = cell.ranking.at(name); e.rate) {
          rate_sum += *e.rate;
          ++rate_n;
        }
        if (const auto& c = cell.correlations.at(name); c.pearson) {
          pearson_sum += *c.pearson;
          ++pearson_n;
        }
      }
      for (const auto& prompt_row : cell.per_prompt) {
        if (prompt_row.metrics.pflat) {
          pflat_sum += *prompt_row.metrics.pflat;
          ++pflat_n;
        }
      }
      SweepRow row;
      row.value = value;
      row.repeat = r;
      if (rate_n) row.mean_rate = rate_sum / rate_n;
      if (pearson_n) row.mean_pearson = pearson_sum / pearson_n;
      if (pflat_n) row.mean_pflat = pflat_sum / pflat_n;
      result.rows.push_back(row);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

}  // namespace pflat
