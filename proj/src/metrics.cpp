#include "pflat/metrics.hpp"

#include "pflat/error.hpp"
#include "pflat/gradient.hpp"
#include "pflat/parallel.hpp"
#include "pflat/random.hpp"

#include <cmath>

namespace pflat {

std::string_view to_string(LossKind kind) { return kind == LossKind::zero_one ? "zero_one" : "cross_entropy"; }

std::string_view to_string(DivergenceKind kind) { return kind == DivergenceKind::kl ? "kl" : "cross_entropy"; }

std::string_view to_string(BaseMetric metric) {
  switch (metric) {
    case BaseMetric::loss: return "loss";
    case BaseMetric::mi: return "mi";
    case BaseMetric::sen: return "sen";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "cross_entropy") return LossKind::cross_entropy;
  if (name == "zero_one") return LossKind::zero_one;
  throw Error(ErrorCode::InvalidArgument, "unknown loss kind '" + std::string(name) + "'");
}

DivergenceKind parse_divergence_kind(std::string_view name) {
  if (name == "kl") return DivergenceKind::kl;
  if (name == "cross_entropy") return DivergenceKind::cross_entropy;
  throw Error(ErrorCode::InvalidArgument, "unknown divergence kind '" + std::string(name) + "'");
}

BaseMetric parse_base_metric(std::string_view name) {
  if (name == "loss") return BaseMetric::loss;
  if (name == "mi") return BaseMetric::mi;
  if (name == "sen") return BaseMetric::sen;
  throw Error(ErrorCode::InvalidArgument, "unknown base metric '" + std::string(name) + "'");
}

double prompt_loss(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled, LossKind kind) {
  if (labeled.empty()) throw Error(ErrorCode::EmptyDataset, "prompt loss over an empty dataset");
  const auto labels = label_indices(labeled, model.verbalizer());
  const Matrix predictions = predict_matrix(model, p, inputs_of(labeled));
  if (kind == LossKind::cross_entropy) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (std::isnan(predictions(static_cast<Index>(i), static_cast<Index>(labels[i])))) {
        throw Error(ErrorCode::NonFiniteLoss, "gold-label probability is NaN for example " + std::to_string(i));
      }
    }
  }
  return loss_from_predictions(predictions, labels, kind);
}

double mutual_information(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs) {
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "mutual information over an empty input set");
  return mutual_information(predict_matrix(model, p, inputs));
}

double sensitivity(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs,
                   std::span<const PromptCandidate> perturbed) {
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "sensitivity over an empty input set");
  if (perturbed.empty()) throw Error(ErrorCode::EmptyPerturbationSet, "no perturbed prompts for '" + p.id + "'");
  std::vector<Index> original;
  for (const auto& x : inputs) original.push_back(argmax(predict_probs(model, p, x)));
  std::uint64_t flips = 0;
  for (const auto& q : perturbed) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (argmax(predict_probs(model, q, inputs[i])) != original[i]) ++flips;
    }
  }
  // One division of integer counts keeps the ratio exact.
  return static_cast<double>(flips) / static_cast<double>(perturbed.size() * inputs.size());
}

double pflat_encoded(const ScoringModel& model, std::span<const TokenSequence> inputs, const PerturbationConfig& cfg,
                     DivergenceKind div, int threads) {
  cfg.validate();
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "pflat over an empty input set");
  std::vector<Vector> base;
  base.reserve(inputs.size());
  for (const auto& x : inputs) base.push_back(model.label_probs(x));

  const ParameterVector theta = model.params();
  std::vector<double> per_sample(static_cast<std::size_t>(cfg.n_samples), 0.0);
  parallel_blocks(per_sample.size(), threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    auto local = model.clone();
    for (std::size_t s = begin; s < end; ++s) {
      local->set_params(theta + sample_gaussian(theta.size(), cfg, static_cast<int>(s)));
      double sum = 0;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Vector q = local->label_probs(inputs[i]);
        const double d = div == DivergenceKind::kl ? std::max(0.0, kl_divergence(base[i], q))
                                                   : cross_entropy(base[i], q);
        if (!std::isfinite(d)) {
          throw Error(ErrorCode::NonFiniteDivergence, "divergence is not finite at sample " + std::to_string(s));
        }
        sum += d;
      }
      per_sample[s] = sum;
    }
  });
  double total = 0;
  for (double v : per_sample) total += v;
  return total / (static_cast<double>(inputs.size()) * cfg.n_samples);
}

double pflat(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs,
             const PerturbationConfig& cfg, DivergenceKind div, int threads) {
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "pflat over an empty input set");
  const auto tokens = encode_all(model, p, inputs);
  return pflat_encoded(model, tokens, cfg, div, threads);
}

double true_flatness(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled, int threads) {
  return grad_prompt_loss(model, p, labeled, threads).norm();
}

SurrogateGaps surrogate_gap_check(const ScoringModel& model, const PromptCandidate& p, const InputSet& inputs,
                                  const Matrix& targets, std::span<const PromptCandidate> perturbed) {
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "surrogate check over an empty input set");
  if (perturbed.empty()) throw Error(ErrorCode::EmptyPerturbationSet, "no perturbed prompts for '" + p.id + "'");
  const Index n = static_cast<Index>(inputs.size());
  if (targets.rows() != n || targets.cols() != static_cast<Index>(model.label_count())) {
    throw Error(ErrorCode::DimensionMismatch, "targets must have one row per input and one column per label");
  }
  const Matrix predictions = predict_matrix(model, p, inputs);
  for (Index i = 0; i < n; ++i) {
    if (total_variation(predictions.row(i), targets.row(i)) > 1e-9) {
      throw Error(ErrorCode::PreconditionNotMet,
                  "prediction " + std::to_string(i) + " differs from its target distribution");
    }
  }

  double ce = 0;
  double zero_one = 0;
  for (Index i = 0; i < n; ++i) {
    ce += cross_entropy(targets.row(i).transpose(), predictions.row(i).transpose());
    zero_one += argmax(predictions.row(i)) != argmax(targets.row(i)) ? 1.0 : 0.0;
  }
  ce /= static_cast<double>(n);
  zero_one /= static_cast<double>(n);
  const double mi = mutual_information(predictions);
  const double marginal_entropy = entropy(Vector(predictions.colwise().mean().transpose()));

  double perturbed_error = 0;
  for (const auto& q : perturbed) {
    for (Index i = 0; i < n; ++i) {
      perturbed_error += argmax(predict_probs(model, q, inputs[static_cast<std::size_t>(i)])) != argmax(targets.row(i))
                             ? 1.0
                             : 0.0;
    }
  }
  perturbed_error /= static_cast<double>(perturbed.size()) * static_cast<double>(n);
  const double sen = sensitivity(model, p, inputs, perturbed);

  return {.mi_gap_at_perfect = std::abs(mi + ce - marginal_entropy),
          .sen_gap_at_perfect = std::abs(sen - zero_one - perturbed_error)};
}

SurrogateGaps surrogate_gap_check(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled,
                                  std::span<const PromptCandidate> perturbed) {
  const auto labels = label_indices(labeled, model.verbalizer());
  Matrix targets = Matrix::Zero(static_cast<Index>(labels.size()), static_cast<Index>(model.label_count()));
  for (std::size_t i = 0; i < labels.size(); ++i) targets(static_cast<Index>(i), static_cast<Index>(labels[i])) = 1;
  return surrogate_gap_check(model, p, inputs_of(labeled), targets, perturbed);
}

double MetricReport::base(BaseMetric metric) const {
  const std::optional<double>* value = nullptr;
  switch (metric) {
    case BaseMetric::loss: value = &loss; break;
    case BaseMetric::mi: value = &mi; break;
    case BaseMetric::sen: value = &sen; break;
  }
  if (!value || !value->has_value()) {
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(metric)) + " was not computed for " + prompt_id);
  }
  return **value;
}

std::vector<PromptCandidate> sensitivity_set_for(const PromptCandidate& p, const Verbalizer& verbalizer,
                                                 const SensitivitySetConfig& cfg) {
  SensitivitySetConfig local = cfg;
  local.seed = derive_seed(cfg.seed, "sensitivity:" + p.id, 0);
  return build_sensitivity_set(p, verbalizer, local);
}

MetricReport score_prompt(const ScoringModel& model, const PromptCandidate& p, const LabeledSet& labeled,
                          const InputSet& inputs, const ScoreOptions& options) {
  MetricReport report;
  report.prompt_id = p.id;
  report.provenance = {.n_samples = options.perturbation.n_samples,
                       .sigma2 = options.perturbation.sigma2,
                       .master_seed = options.perturbation.master_seed,
                       .loss_kind = options.loss_kind,
                       .divergence_kind = options.divergence,
                       .alpha = options.alpha,
                       .combined_base = options.combined_base};
  const bool combine = options.alpha.has_value() && options.combined_base.has_value();
  auto is_base = [&](BaseMetric m) { return combine && *options.combined_base == m; };

  if (options.loss || is_base(BaseMetric::loss)) report.loss = prompt_loss(model, p, labeled, options.loss_kind);
  if (options.mi || is_base(BaseMetric::mi)) report.mi = mutual_information(model, p, inputs);
  if (options.sen || is_base(BaseMetric::sen)) {
    report.sen = sensitivity(model, p, inputs, sensitivity_set_for(p, model.verbalizer(), options.sensitivity));
  }
  if (options.pflat || (combine && *options.alpha > 0)) {
    report.pflat = pflat(model, p, inputs, options.perturbation, options.divergence, options.threads);
  }
  if (options.true_flatness) report.true_flatness = true_flatness(model, p, labeled, options.threads);
  if (combine) {
    const BaseMetric base = *options.combined_base;
    // alpha = 0 needs no flatness estimate at all.
    const double flat = *options.alpha > 0 ? *report.pflat : 0.0;
    report.combined = combined_score(report.base(base), direction_of(base), flat, *options.alpha);
  }
  return report;
}

}  // namespace pflat
