#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace pflat {

using Scalar = double;

template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<Scalar>;
using Matrix = MatrixX<Scalar>;
using Index = Eigen::Index;

/// Flat parameter vector of a scoring model (theta, or a perturbation of it).
using ParameterVector = Vector;

/// Continuous prompt, one row per prefix position.
using PrefixParameters = Matrix;

/// Applied to every probability before a log is taken.
inline constexpr Scalar kProbabilityFloor = 1e-12;

enum class Direction { lower_better, higher_better };

}  // namespace pflat
