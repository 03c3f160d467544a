#include "pflat/model.hpp"

#include "pflat/error.hpp"
#include "pflat/logistic_bag.hpp"
#include "pflat/tiny_transformer.hpp"
#include "pflat/weight_file.hpp"

namespace pflat {

double PredictionDistribution::operator[](std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return probs(static_cast<Index>(i));
  }
  throw Error(ErrorCode::UnknownLabel, "label '" + std::string(label) + "' is not in the distribution");
}

ScoringModel::ScoringModel(Verbalizer verbalizer, Index param_count)
    : params_(ParameterVector::Zero(param_count)), verbalizer_(std::move(verbalizer)) {}

void ScoringModel::set_params(const ParameterVector& values) {
  if (values.size() != params_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(params_.size()) + " parameters, got " +
                                                  std::to_string(values.size()));
  }
  if (!values.allFinite()) throw Error(ErrorCode::NonFiniteParameters, "parameter vector has non-finite entries");
  params_ = values;
  on_params_changed();
}

ParameterVector ScoringModel::analytic_loss_gradient(std::span<const TokenSequence>,
                                                     std::span<const std::size_t>) const {
  throw Error(ErrorCode::InvalidArgument, std::string(backend_name()) + " has no analytic gradient");
}

std::pair<double, PrefixParameters> ScoringModel::analytic_prefix_gradient(std::span<const TokenSequence>,
                                                                           std::span<const std::size_t>,
                                                                           const PrefixParameters&) const {
  throw Error(ErrorCode::InvalidArgument, std::string(backend_name()) + " has no analytic prefix gradient");
}

TokenSequence encode(const ScoringModel& model, const PromptCandidate& prompt, std::string_view input) {
  return model.tokenize(render(prompt, model.verbalizer(), input));
}

std::vector<TokenSequence> encode_all(const ScoringModel& model, const PromptCandidate& prompt,
                                      const InputSet& inputs) {
  std::vector<TokenSequence> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) out.push_back(encode(model, prompt, x));
  return out;
}

Vector predict_probs(const ScoringModel& model, const PromptCandidate& prompt, std::string_view input) {
  return model.label_probs(encode(model, prompt, input));
}

PredictionDistribution predict(const ScoringModel& model, const PromptCandidate& prompt, std::string_view input) {
  return {model.verbalizer().labels(), predict_probs(model, prompt, input)};
}

Matrix predict_matrix(const ScoringModel& model, const PromptCandidate& prompt, const InputSet& inputs) {
  Matrix out(static_cast<Index>(inputs.size()), static_cast<Index>(model.label_count()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out.row(static_cast<Index>(i)) = predict_probs(model, prompt, inputs[i]).transpose();
  }
  return out;
}

std::unique_ptr<ScoringModel> load_model(const std::filesystem::path& path, const Verbalizer& verbalizer) {
  const auto header = read_weight_file_header(path);
  const auto backend = header.config.value("backend", std::string{});
  if (backend == LogisticBagModel::kBackend) {
    return std::make_unique<LogisticBagModel>(LogisticBagModel::load(path, verbalizer));
  }
  if (backend == TinyTransformerModel::kBackend) {
    return std::make_unique<TinyTransformerModel>(TinyTransformerModel::load(path, verbalizer));
  }
  throw Error(ErrorCode::FormatError, path.string() + ": unknown backend '" + backend + "'");
}

}  // namespace pflat
