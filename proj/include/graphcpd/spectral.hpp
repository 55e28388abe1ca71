#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "graphcpd/graph.hpp"

namespace graphcpd {

/// Full eigendecomposition of a symmetric matrix, eigenvalues sorted in
/// descending order (by signed value) with the matching eigenvector columns.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

namespace detail {

// Canonical eigenvector signs: the largest-magnitude entry of each column is
// made positive; ties resolved toward the lowest index. Keeps decompositions
// reproducible across solver versions.
inline void fix_column_signs(Eigen::MatrixXd& vecs) {
  for (Eigen::Index c = 0; c < vecs.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = std::abs(vecs(0, c));
    for (Eigen::Index r = 1; r < vecs.rows(); ++r) {
      const double a = std::abs(vecs(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (vecs(arg, c) < 0.0) vecs.col(c) = -vecs.col(c);
  }
}

}  // namespace detail

inline SpectralDecomposition eigendecompose(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("eigendecompose: matrix must be square and non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("eigendecompose: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecompose: eigensolver failed to converge");
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  detail::fix_column_signs(out.eigenvectors);
  return out;
}

inline SpectralDecomposition eigendecompose(const ShiftOperator& s) {
  return eigendecompose(s.matrix());
}

}  // namespace graphcpd
