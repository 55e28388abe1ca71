#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "graphcpd/spectral.hpp"
#include "graphcpd/subspace.hpp"

namespace graphcpd {

/// Coefficients (alpha_0, ..., alpha_T) of a polynomial graph filter
/// H(S) = sum_k alpha_k S^k. The scalar transfer function is
/// h(lambda) = sum_k alpha_k lambda^k.
class FilterCoefficients {
 public:
  explicit FilterCoefficients(std::vector<double> alpha, bool allow_zero = false)
      : alpha_(std::move(alpha)) {
    if (alpha_.empty())
      throw std::invalid_argument("FilterCoefficients: need at least one coefficient");
    const bool all_zero =
        std::all_of(alpha_.begin(), alpha_.end(), [](double a) { return a == 0.0; });
    if (all_zero && !allow_zero)
      throw std::invalid_argument("FilterCoefficients: all coefficients are zero");
  }

  int degree() const { return static_cast<int>(alpha_.size()) - 1; }
  const std::vector<double>& alpha() const { return alpha_; }

  double response(double lambda) const {
    double r = alpha_.back();
    for (int k = static_cast<int>(alpha_.size()) - 2; k >= 0; --k)
      r = r * lambda + alpha_[k];
    return r;
  }

 private:
  std::vector<double> alpha_;
};

inline double filter_response(const FilterCoefficients& f, double lambda) {
  return f.response(lambda);
}

/// H(S) x evaluated Horner-style with T matrix-vector products and no
/// explicit matrix powers.
inline Eigen::VectorXd apply_filter(const FilterCoefficients& f,
                                    const Eigen::MatrixXd& shift,
                                    const Eigen::VectorXd& x) {
  if (shift.rows() != shift.cols() || shift.rows() != x.size())
    throw std::invalid_argument("apply_filter: dimension mismatch");
  const auto& a = f.alpha();
  Eigen::VectorXd r = a.back() * x;
  for (int k = static_cast<int>(a.size()) - 2; k >= 0; --k)
    r = (shift * r + a[k] * x).eval();
  return r;
}

inline Eigen::VectorXd apply_filter(const FilterCoefficients& f,
                                    const ShiftOperator& shift,
                                    const Eigen::VectorXd& x) {
  return apply_filter(f, shift.matrix(), x);
}

/// Covariance of y = H(S) w for white unit-variance input:
/// C = sum_i h(lambda_i)^2 v_i v_i^T.
inline Eigen::MatrixXd theoretical_covariance(const FilterCoefficients& f,
                                              const SpectralDecomposition& sd) {
  Eigen::VectorXd h2(sd.eigenvalues.size());
  for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) {
    const double h = f.response(sd.eigenvalues(i));
    h2(i) = h * h;
  }
  Eigen::MatrixXd c = sd.eigenvectors * h2.asDiagonal() * sd.eigenvectors.transpose();
  return 0.5 * (c + c.transpose());
}

inline Eigen::MatrixXd theoretical_covariance(const FilterCoefficients& f,
                                              const ShiftOperator& shift) {
  return theoretical_covariance(f, eigendecompose(shift));
}

/// Result of ranking a shift's eigenvectors by squared filter response.
/// `degenerate` flags a (near-)tie at the k-th position, where the returned
/// basis is one of several equally valid choices (the lowest eigenvalue
/// indices win).
struct DominantSubspace {
  Subspace subspace;
  bool degenerate;
};

inline DominantSubspace dominant_subspace_of(const FilterCoefficients& f,
                                             const SpectralDecomposition& sd,
                                             int k) {
  const int n = static_cast<int>(sd.eigenvalues.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("dominant_subspace_of: need 1 <= k <= n");
  std::vector<double> h2(n);
  for (int i = 0; i < n; ++i) {
    const double h = f.response(sd.eigenvalues(i));
    h2[i] = h * h;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return h2[a] > h2[b]; });
  const bool degenerate = k < n && h2[order[k - 1]] - h2[order[k]] < 1e-9;
  Eigen::MatrixXd basis(n, k);
  for (int j = 0; j < k; ++j) basis.col(j) = sd.eigenvectors.col(order[j]);
  return DominantSubspace{Subspace(std::move(basis)), degenerate};
}

inline DominantSubspace dominant_subspace_of(const FilterCoefficients& f,
                                             const Eigen::MatrixXd& shift,
                                             int k) {
  return dominant_subspace_of(f, eigendecompose(shift), k);
}

inline DominantSubspace dominant_subspace_of(const FilterCoefficients& f,
                                             const ShiftOperator& shift,
                                             int k) {
  return dominant_subspace_of(f, eigendecompose(shift), k);
}

}  // namespace graphcpd
