#include "pflat/logistic_bag.hpp"

#include "pflat/error.hpp"
#include "pflat/information.hpp"
#include "pflat/random.hpp"
#include "pflat/weight_file.hpp"

#include <algorithm>
#include <cmath>

namespace pflat {

void LogisticBagConfig::validate() const {
  if (vocab_size < 64) throw Error(ErrorCode::InvalidConfig, "vocab_size must be >= 64");
  if (!(l2 >= 0)) throw Error(ErrorCode::InvalidConfig, "l2 must be non-negative");
  if (train_epochs < 1) throw Error(ErrorCode::InvalidConfig, "train_epochs must be positive");
  if (!(learning_rate > 0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be positive");
}

LogisticBagModel::LogisticBagModel(Verbalizer verbalizer, int vocab_size)
    : ScoringModel(verbalizer, static_cast<Index>(verbalizer.size()) * (static_cast<Index>(vocab_size) + 1)),
      vocab_size_(vocab_size) {
  if (vocab_size < 64) throw Error(ErrorCode::InvalidConfig, "vocab_size must be >= 64");
}

std::unique_ptr<ScoringModel> LogisticBagModel::clone() const { return std::make_unique<LogisticBagModel>(*this); }

TokenSequence LogisticBagModel::tokenize(std::string_view text) const { return hashed_tokenize(text, vocab_size_); }

LogisticBagModel::WeightMap LogisticBagModel::weights() const {
  return WeightMap(params_.data(), static_cast<Index>(label_count()), vocab_size_);
}

Eigen::Map<const Vector> LogisticBagModel::bias() const {
  const Index k = static_cast<Index>(label_count());
  return Eigen::Map<const Vector>(params_.data() + k * vocab_size_, k);
}

SparseFeatures LogisticBagModel::features(const TokenSequence& tokens) const {
  TokenSequence sorted = tokens;
  std::sort(sorted.begin(), sorted.end());
  SparseFeatures phi;
  for (TokenId t : sorted) {
    if (!phi.empty() && phi.back().first == t) {
      phi.back().second += 1;
    } else {
      phi.emplace_back(t, 1);
    }
  }
  return phi;
}

Vector LogisticBagModel::logits(const SparseFeatures& phi, const PrefixParameters* prefix) const {
  const auto w = weights();
  Vector z = bias();
  for (const auto& [bucket, count] : phi) z += count * w.col(bucket);
  if (prefix != nullptr && prefix->size() > 0) {
    if (prefix->cols() != vocab_size_) throw Error(ErrorCode::DimensionMismatch, "prefix width must equal vocab_size");
    z += w * prefix->colwise().sum().transpose();
  }
  return z;
}

Vector LogisticBagModel::label_probs(const TokenSequence& tokens, const PrefixParameters* prefix) const {
  return softmax(logits(features(tokens), prefix));
}

ParameterVector LogisticBagModel::analytic_loss_gradient(std::span<const TokenSequence> inputs,
                                                         std::span<const std::size_t> labels) const {
  if (inputs.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "inputs and labels differ in length");
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "gradient over an empty dataset");
  const Index k = static_cast<Index>(label_count());
  ParameterVector grad = ParameterVector::Zero(param_count());
  Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(grad.data(), k, vocab_size_);
  Eigen::Map<Vector> gb(grad.data() + k * vocab_size_, k);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto phi = features(inputs[i]);
    Vector delta = softmax(logits(phi));
    delta(static_cast<Index>(labels[i])) -= 1;
    for (const auto& [bucket, count] : phi) gw.col(bucket) += count * delta;
    gb += delta;
  }
  grad /= static_cast<Scalar>(inputs.size());
  return grad;
}

std::pair<double, PrefixParameters> LogisticBagModel::analytic_prefix_gradient(std::span<const TokenSequence> inputs,
                                                                               std::span<const std::size_t> labels,
                                                                               const PrefixParameters& prefix) const {
  if (inputs.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "inputs and labels differ in length");
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "gradient over an empty dataset");
  const Index k = static_cast<Index>(label_count());
  Vector delta_sum = Vector::Zero(k);
  double loss = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Vector p = label_probs(inputs[i], &prefix);
    loss -= std::log(std::max(p(static_cast<Index>(labels[i])), kProbabilityFloor));
    p(static_cast<Index>(labels[i])) -= 1;
    delta_sum += p;
  }
  const double n = static_cast<double>(inputs.size());
  // Every prefix row feeds the same summed bias, so all rows share one gradient.
  const Vector row_grad = weights().transpose() * (delta_sum / n);
  PrefixParameters grad(prefix.rows(), prefix.cols());
  grad.rowwise() = row_grad.transpose();
  return {loss / n, grad};
}

void LogisticBagModel::save(const std::filesystem::path& path) const {
  const Index k = static_cast<Index>(label_count());
  const nlohmann::json config = {
      {"backend", std::string(kBackend)}, {"vocab_size", vocab_size_}, {"labels", verbalizer().labels()}};
  const std::vector<TensorView> tensors = {
      {"weight", {k, vocab_size_}, {params_.data(), static_cast<std::size_t>(k * vocab_size_)}},
      {"bias", {k}, {params_.data() + k * vocab_size_, static_cast<std::size_t>(k)}},
  };
  write_weight_file(path, config, tensors);
}

LogisticBagModel LogisticBagModel::load(const std::filesystem::path& path, const Verbalizer& verbalizer) {
  const auto contents = read_weight_file(path);
  const auto& config = contents.header.config;
  if (config.value("backend", std::string{}) != kBackend) {
    throw Error(ErrorCode::FormatError, path.string() + " does not hold a " + std::string(kBackend) + " model");
  }
  int vocab_size = 0;
  std::vector<std::string> labels;
  try {
    vocab_size = config.at("vocab_size").get<int>();
    labels = config.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  if (labels != verbalizer.labels()) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": label set differs from the verbalizer");
  }
  LogisticBagModel model(verbalizer, vocab_size);
  const Index k = static_cast<Index>(labels.size());
  const auto& w = contents.tensor("weight");
  const auto& b = contents.tensor("bias");
  if (contents.info("weight").shape != std::vector<std::int64_t>{k, vocab_size} ||
      contents.info("bias").shape != std::vector<std::int64_t>{k}) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": tensor shapes do not match the header config");
  }
  ParameterVector params(model.param_count());
  for (std::size_t i = 0; i < w.size(); ++i) params(static_cast<Index>(i)) = w[i];
  for (std::size_t i = 0; i < b.size(); ++i) params(static_cast<Index>(w.size() + i)) = b[i];
  model.set_params(params);
  return model;
}

LogisticFit fit_logistic(const LabeledSet& train, const Verbalizer& verbalizer, const LogisticBagConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  const auto labels = label_indices(train, verbalizer);
  std::vector<std::size_t> per_label(verbalizer.size(), 0);
  for (auto y : labels) ++per_label[y];
  for (std::size_t k = 0; k < per_label.size(); ++k) {
    if (per_label[k] == 0) throw Error(ErrorCode::MissingLabel, "no training example for label '" + verbalizer.label(k) + "'");
  }

  LogisticBagModel model(verbalizer, cfg.vocab_size);
  std::vector<TokenSequence> inputs;
  inputs.reserve(train.size());
  double mean_sq_norm = 0;
  for (const auto& e : train) {
    inputs.push_back(model.tokenize(e.text));
    double sq = 1;  // bias feature
    for (const auto& [bucket, count] : model.features(inputs.back())) sq += count * count;
    mean_sq_norm += sq;
  }
  mean_sq_norm /= static_cast<double>(train.size());

  Rng rng(derive_seed(cfg.seed, "logistic-init", 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  ParameterVector theta(model.param_count());
  for (Index i = 0; i < theta.size(); ++i) theta(i) = cfg.init_scale * normal(rng);
  model.set_params(theta);

  // The softmax cross-entropy Hessian in logit space is bounded by I/2, so the
  // objective is (mean ||[phi;1]||^2 / 2 + l2)-smooth; stepping at most the
  // inverse keeps every epoch non-increasing.
  const double smoothness = 0.5 * mean_sq_norm + cfg.l2;
  const double step = std::min(cfg.learning_rate, 1.0 / smoothness);

  auto objective = [&](const LogisticBagModel& m) {
    double loss = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      loss -= std::log(std::max(m.label_probs(inputs[i])(static_cast<Index>(labels[i])), kProbabilityFloor));
    }
    return loss / static_cast<double>(inputs.size()) + 0.5 * cfg.l2 * m.params().squaredNorm();
  };

  LogisticFit fit{model, {}, 0.0, step};
  for (int epoch = 0; epoch < cfg.train_epochs; ++epoch) {
    fit.loss_history.push_back(objective(fit.model));
    ParameterVector grad = fit.model.analytic_loss_gradient(inputs, labels) + cfg.l2 * fit.model.params();
    fit.final_grad_norm = grad.norm();
    if (fit.final_grad_norm <= cfg.grad_tol) break;
    fit.model.set_params(fit.model.params() - step * grad);
  }
  fit.loss_history.push_back(objective(fit.model));
  fit.final_grad_norm =
      (fit.model.analytic_loss_gradient(inputs, labels) + cfg.l2 * fit.model.params()).norm();
  return fit;
}

}  // namespace pflat
