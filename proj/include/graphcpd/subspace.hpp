#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "graphcpd/errors.hpp"
#include "graphcpd/spectral.hpp"

namespace graphcpd {

/// A k-dimensional subspace of R^n represented by an orthonormal basis held
/// in the columns of an n x k matrix. Orthonormality is checked on
/// construction (max entry of B^T B - I within 1e-10).
class Subspace {
 public:
  explicit Subspace(Eigen::MatrixXd basis) : basis_(std::move(basis)) {
    const Eigen::Index n = basis_.rows();
    const Eigen::Index k = basis_.cols();
    if (k < 1 || k > n)
      throw std::invalid_argument("Subspace: need 1 <= k <= n");
    Eigen::MatrixXd gram = basis_.transpose() * basis_;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("Subspace: basis columns are not orthonormal");
  }

  /// Span of the standard basis vector e_index.
  static Subspace one_hot(int n, int index) {
    if (n < 1 || index < 0 || index >= n)
      throw std::invalid_argument("Subspace::one_hot: index out of range");
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 1);
    b(index, 0) = 1.0;
    return Subspace(std::move(b));
  }

  int n() const { return static_cast<int>(basis_.rows()); }
  int k() const { return static_cast<int>(basis_.cols()); }
  const Eigen::MatrixXd& basis() const { return basis_; }

 private:
  Eigen::MatrixXd basis_;
};

/// Frobenius sin-theta distance between equal-dimension subspaces:
/// sqrt(k - ||U^T V||_F^2), which equals the root sum of squared principal
/// angle sines. Basis-invariant; ranges over [0, sqrt(k)].
inline double sin_theta_distance(const Subspace& u, const Subspace& v) {
  if (u.n() != v.n() || u.k() != v.k())
    throw std::invalid_argument("sin_theta_distance: subspace dimensions differ");
  const double g = (u.basis().transpose() * v.basis()).squaredNorm();
  return std::sqrt(std::max(0.0, static_cast<double>(u.k()) - g));
}

/// Principal angles between two equal-dimension subspaces, ascending, from
/// the singular values of U^T V clamped into [0, 1].
inline Eigen::VectorXd principal_angles(const Subspace& u, const Subspace& v) {
  if (u.n() != v.n() || u.k() != v.k())
    throw std::invalid_argument("principal_angles: subspace dimensions differ");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(u.basis().transpose() * v.basis());
  Eigen::VectorXd angles(u.k());
  for (int i = 0; i < u.k(); ++i) {
    const double s = std::clamp(svd.singularValues()(i), 0.0, 1.0);
    angles(i) = std::acos(s);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

/// A block of b consecutive graph signals, one per column.
struct SignalBlock {
  Eigen::MatrixXd samples;
  long block_index = 0;
};

/// Uncentered sample covariance (1/b) sum_t y_t y_t^T of the block columns.
/// Signals are modeled as zero-mean, so no mean is subtracted.
inline Eigen::MatrixXd sample_covariance(const SignalBlock& block) {
  if (block.samples.cols() < 1 || block.samples.rows() < 1)
    throw std::invalid_argument("sample_covariance: empty block");
  Eigen::MatrixXd c = block.samples * block.samples.transpose();
  c /= static_cast<double>(block.samples.cols());
  return 0.5 * (c + c.transpose());
}

/// Top-k eigenvector subspace of the block's sample covariance. For a
/// single-sample block with k = 1 this is exactly the normalized signal, so
/// that case skips the eigensolver. All-zero blocks are degenerate.
inline Subspace estimate_dominant_subspace(const SignalBlock& block, int k) {
  const Eigen::Index n = block.samples.rows();
  if (block.samples.cols() < 1 || n < 1)
    throw std::invalid_argument("estimate_dominant_subspace: empty block");
  if (k < 1 || k > n)
    throw std::invalid_argument("estimate_dominant_subspace: need 1 <= k <= n");
  if (block.samples.cols() == 1 && k == 1) {
    const double norm = block.samples.col(0).norm();
    if (norm == 0.0)
      throw DegenerateBlockError("estimate_dominant_subspace: all-zero block");
    return Subspace(block.samples.col(0) / norm);
  }
  const Eigen::MatrixXd cov = sample_covariance(block);
  if (cov.isZero(0.0))
    throw DegenerateBlockError("estimate_dominant_subspace: all-zero block");
  const SpectralDecomposition sd = eigendecompose(cov);
  return Subspace(sd.eigenvectors.leftCols(k));
}

}  // namespace graphcpd
