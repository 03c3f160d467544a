#pragma once

#include "pflat/error.hpp"
#include "pflat/model.hpp"

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace pflat {

struct SamConfig {
  double rho = 0.05;
  double learning_rate = 5e-5;
  int epochs = 25;
  int prefix_len = 10;
  double init_scale = 0.01;
  double grad_norm_floor = 1e-12;
  bool use_flatness = true;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
};

template <typename S>
struct SamStep {
  MatrixX<S> prefix;
  /// Loss and gradient norm at the starting point.
  S loss;
  S grad_norm;
};

/// One update. With flatness: g0 = grad(w), eps = rho g0 / ||g0|| (0 when
/// ||g0|| <= grad_norm_floor), w' = w - lr grad(w + eps). Without: w' = w -
/// lr g0. `grad_fn(w)` returns (loss, gradient). Throws NonFiniteGradient or
/// DimensionMismatch.
template <typename Derived, typename GradFn>
SamStep<typename Derived::Scalar> sam_update(const Eigen::MatrixBase<Derived>& prefix, GradFn&& grad_fn,
                                             const SamConfig& cfg) {
  using S = typename Derived::Scalar;
  const MatrixX<S> w = prefix;
  auto evaluate = [&](const MatrixX<S>& at) {
    std::pair<S, MatrixX<S>> out = grad_fn(at);
    if (out.second.rows() != at.rows() || out.second.cols() != at.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "gradient shape differs from the prefix");
    }
    if (!out.second.allFinite()) throw Error(ErrorCode::NonFiniteGradient, "gradient has non-finite entries");
    return out;
  };
  const auto [loss, g0] = evaluate(w);
  const S norm = g0.norm();
  if (!cfg.use_flatness) return {w - S(cfg.learning_rate) * g0, loss, norm};
  if (norm <= S(cfg.grad_norm_floor)) return {w - S(cfg.learning_rate) * g0, loss, norm};
  const MatrixX<S> ascent = w + (S(cfg.rho) / norm) * g0;
  return {w - S(cfg.learning_rate) * evaluate(ascent).second, loss, norm};
}

template <typename Derived, typename GradFn>
MatrixX<typename Derived::Scalar> sam_step(const Eigen::MatrixBase<Derived>& prefix, GradFn&& grad_fn,
                                           const SamConfig& cfg) {
  return sam_update(prefix, std::forward<GradFn>(grad_fn), cfg).prefix;
}

struct PrefixHistoryEntry {
  int epoch = 0;
  double loss = 0;
  /// ||grad_prefix L|| before the epoch's update.
  double grad_norm = 0;
};

struct PrefixTuneResult {
  PrefixParameters prefix;
  std::vector<PrefixHistoryEntry> history;
};

/// N(0, init_scale^2) entries of shape prefix_len x model.prefix_width().
PrefixParameters initial_prefix(const ScoringModel& model, const SamConfig& cfg);

/// Full-batch training of a prefix on the raw training texts with the model
/// weights frozen. Throws MissingLabel/UnknownLabel, EmptyDataset, or
/// PrefixTooLargeForFiniteDiff (non-analytic backends).
PrefixTuneResult prefix_tune(const ScoringModel& model, const LabeledSet& train, const SamConfig& cfg,
                             int threads = 1);

/// Accuracy of prefix-conditioned predictions on raw texts.
double prefix_accuracy(const ScoringModel& model, const PrefixParameters& prefix, const LabeledSet& test);

/// Two minima of equal depth in the plane, one sharp and one flat:
///
///   L(x, y) = c (x^2 - 1)^2 (1 + beta x) + a(x) y^2 / 2
///   a(x)    = a_flat + (a_sharp - a_flat) / (1 + exp(k x))
///
/// Both minima sit at y = 0 with L = 0: x = -1 where the y-curvature is about
/// a_sharp, and x = +1 where it is about a_flat. The ridge between them is at
/// the root of 5 beta x^2 + 4 x - beta = 0 (x ~ 0.17 for beta = 0.8), so a
/// start at x = 0 drifts to the sharp well under plain descent. SAM's ascent
/// step sees the y-curvature fall off toward +x and crosses the ridge.
struct TwoMinimaLandscape {
  double c = 0.1;
  double beta = 0.8;
  double a_sharp = 40;
  double a_flat = 1;
  double k = 4;

  enum class Basin { sharp, flat, neither };

  double curvature(double x) const { return a_flat + (a_sharp - a_flat) / (1 + std::exp(k * x)); }

  double loss(double x, double y) const {
    const double u = x * x - 1;
    return c * u * u * (1 + beta * x) + 0.5 * curvature(x) * y * y;
  }

  Eigen::Vector2d gradient(double x, double y) const {
    const double u = x * x - 1;
    const double s = 1 / (1 + std::exp(k * x));
    const double da = -(a_sharp - a_flat) * k * s * (1 - s);
    const double dv = c * u * (4 * x * (1 + beta * x) + beta * u);
    return {dv + 0.5 * da * y * y, curvature(x) * y};
  }

  /// (loss, gradient) over a 1 x 2 matrix holding (x, y).
  std::pair<double, Matrix> operator()(const Matrix& w) const {
    const Eigen::Vector2d g = gradient(w(0, 0), w(0, 1));
    Matrix out(1, 2);
    out << g(0), g(1);
    return {loss(w(0, 0), w(0, 1)), out};
  }

  /// Within 0.2 of a minimum along x and 0.2 along y.
  Basin basin_of(double x, double y) const {
    if (std::abs(y) >= 0.2) return Basin::neither;
    if (std::abs(x + 1) < 0.2) return Basin::sharp;
    if (std::abs(x - 1) < 0.2) return Basin::flat;
    return Basin::neither;
  }
};

}  // namespace pflat
