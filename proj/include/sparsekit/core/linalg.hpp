#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sparsekit/core/types.hpp"

namespace sparsekit {

inline constexpr double pinv_cutoff = 1e-10;

// Minimum-norm least-squares solution; singular values below 1e-10 * sigma_max are dropped.
template <class Derived, class Rhs>
auto pseudo_inverse_solve(const Eigen::MatrixBase<Derived>& A, const Eigen::MatrixBase<Rhs>& b) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  require(A.rows() == b.rows(), errc::invalid_argument, "pseudo_inverse_solve: dimension mismatch");
  require(A.rows() > 0 && A.cols() > 0, errc::invalid_argument, "pseudo_inverse_solve: empty matrix");
  Eigen::BDCSVD<Mat> svd(Mat(A), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  require(smax > 0.0, errc::invalid_argument, "pseudo_inverse_solve: zero matrix");
  Vec utb = svd.matrixU().adjoint() * Vec(b);
  for (Eigen::Index i = 0; i < s.size(); ++i) utb[i] = s[i] > pinv_cutoff * smax ? utb[i] / s[i] : Scalar(0);
  return Vec(svd.matrixV() * utb);
}

template <class Derived>
auto pseudo_inverse(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::BDCSVD<Mat> svd(Mat(A), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv[i] = s[i] > pinv_cutoff * smax ? 1.0 / s[i] : 0.0;
  return Mat(svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint());
}

struct EigenDecomposition {
  RVec values;   // descending
  CMat vectors;  // orthonormal columns, matching order
};

inline EigenDecomposition hermitian_eig(const CMat& A) {
  require(A.rows() == A.cols(), errc::invalid_argument, "hermitian_eig: matrix not square");
  require(A.rows() > 0, errc::invalid_argument, "hermitian_eig: empty matrix");
  const CMat H = (A + A.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(H);
  require(es.info() == Eigen::Success, errc::numeric, "hermitian_eig: eigensolver failed");
  const Eigen::Index n = A.rows();
  EigenDecomposition out{RVec(n), CMat(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = es.eigenvalues()[n - 1 - i];
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

inline cplx polyval(const std::vector<cplx>& h, cplx z) {
  cplx acc = 0.0;
  for (const auto& c : h) acc = acc * z + c;
  return acc;
}

// Roots of sum_i h[i] z^{k-i} (h[0] leads) from the companion matrix, each polished by Newton steps.
inline std::vector<cplx> polynomial_roots(const std::vector<cplx>& h) {
  require(h.size() >= 2, errc::invalid_argument, "polynomial_roots: degree must be at least 1");
  require(std::abs(h[0]) > 0.0, errc::invalid_argument, "polynomial_roots: zero leading coefficient");
  const Eigen::Index k = static_cast<Eigen::Index>(h.size()) - 1;
  CMat C = CMat::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) C(0, j) = -h[static_cast<std::size_t>(j + 1)] / h[0];
  for (Eigen::Index i = 1; i < k; ++i) C(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<CMat> es(C, false);
  require(es.info() == Eigen::Success, errc::numeric, "polynomial_roots: eigensolver failed");

  std::vector<cplx> dh(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) dh[static_cast<std::size_t>(i)] = h[static_cast<std::size_t>(i)] * static_cast<double>(k - i);

  std::vector<cplx> roots(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    cplx z = es.eigenvalues()[i];
    double best = std::abs(polyval(h, z));
    for (int it = 0; it < 8 && best > 0.0; ++it) {
      const cplx d = polyval(dh, z);
      if (std::abs(d) == 0.0) break;
      const cplx zn = z - polyval(h, z) / d;
      const double r = std::abs(polyval(h, zn));
      if (!(r < best)) break;
      z = zn;
      best = r;
    }
    roots[static_cast<std::size_t>(i)] = z;
  }
  return roots;
}

// Coefficients (leading first) of prod_i (z - r_i).
inline std::vector<cplx> poly_from_roots(const std::vector<cplx>& r) {
  std::vector<cplx> h{1.0};
  for (const auto& z : r) {
    h.push_back(0.0);
    for (std::size_t i = h.size() - 1; i >= 1; --i) h[i] -= z * h[i - 1];
  }
  return h;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

// Calls f(indices) for every k-subset of [0, n) in lexicographic order.
template <class F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    f(static_cast<const std::vector<std::size_t>&>(idx));
    if (k == 0) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace sparsekit
