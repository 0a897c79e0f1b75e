#pragma once

#include <Eigen/Dense>
#include <vector>

namespace layoutgen::metrics {

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Mean and unbiased covariance of the rows of `features` (n x d, n >= 2).
GaussianFit fit_gaussian(const Eigen::MatrixXd& features);

/// Squared Fréchet distance
///   |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2),
/// with square roots from symmetric eigendecompositions and eigenvalues
/// below zero clamped. Throws std::invalid_argument on non-finite input or
/// mismatched dimensions.
double frechet_distance(const GaussianFit& a, const GaussianFit& b);

}  // namespace layoutgen::metrics
