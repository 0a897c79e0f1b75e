#include "layoutgen/metrics/frechet.hpp"

#include <stdexcept>

namespace layoutgen::metrics {

namespace {

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double trace_sqrt_psd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

}  // namespace

GaussianFit fit_gaussian(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw std::invalid_argument("fit_gaussian needs at least two samples");
  GaussianFit g;
  g.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - g.mean.transpose();
  g.covariance = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  return g;
}

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  const auto d = a.mean.size();
  if (b.mean.size() != d || a.covariance.rows() != d || a.covariance.cols() != d || b.covariance.rows() != d ||
      b.covariance.cols() != d) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  if (!a.mean.allFinite() || !b.mean.allFinite() || !a.covariance.allFinite() || !b.covariance.allFinite()) {
    throw std::invalid_argument("frechet_distance: non-finite input");
  }
  const Eigen::MatrixXd ra = sqrt_psd(a.covariance);
  const double cross = trace_sqrt_psd(ra * b.covariance * ra);
  const double value = (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

}  // namespace layoutgen::metrics
