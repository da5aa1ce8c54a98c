// Dense symmetric eigendecomposition, thin SVD, Gram pseudo-inverse and
// numerical rank, with a deterministic sign convention on every singular or
// eigen vector: the entry of largest magnitude is made positive (lowest index
// wins ties).
#pragma once

#include "cpcp/tensor.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <vector>

namespace cpcp {

template <typename Scalar>
struct EigResult {
  Vec<Scalar> eigenvalues;   // nonincreasing
  Mat<Scalar> eigenvectors;  // orthonormal columns
};

template <typename Scalar>
struct SvdResult {
  Mat<Scalar> U;               // m x p, p = min(m, n)
  Vec<Scalar> singular_values;  // nonincreasing, nonnegative
  Mat<Scalar> V;               // n x p
};

/// +1 or -1 such that sign * v has a positive largest-magnitude entry.
template <typename Derived>
typename Derived::Scalar canonical_sign(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (v.size() == 0) return Scalar(1);
  const Scalar peak = v.cwiseAbs().maxCoeff();
  // Entries within a few ulps of the peak count as ties.
  const Scalar tie = peak * (Scalar(1) - Scalar(16) * std::numeric_limits<Scalar>::epsilon());
  for (Index i = 0; i < v.size(); ++i)
    if (abs(v[i]) >= tie) return v[i] < Scalar(0) ? Scalar(-1) : Scalar(1);
  return Scalar(1);
}

template <typename Scalar>
EigResult<Scalar> sym_eig(const Mat<Scalar>& M) {
  if (M.rows() != M.cols()) throw DimensionError("sym_eig: matrix must be square");
  if (!M.allFinite()) throw DataError("sym_eig: non-finite entry");
  const Index n = M.rows();
  EigResult<Scalar> out;
  if (n == 0) return out;
  const Mat<Scalar> S = (M + M.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(S);
  if (es.info() != Eigen::Success) throw DataError("sym_eig: eigensolver did not converge");
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  for (Index c = 0; c < n; ++c) out.eigenvectors.col(c) *= canonical_sign(out.eigenvectors.col(c));
  // Within a cluster of (numerically) equal eigenvalues, order vectors by the
  // index of their peak entry. The eigenvalues keep their sorted order.
  const Scalar tol = Scalar(16) * std::numeric_limits<Scalar>::epsilon() * out.eigenvalues.cwiseAbs().maxCoeff();
  auto peak = [&](Index c) {
    Index p = 0;
    out.eigenvectors.col(c).cwiseAbs().maxCoeff(&p);
    return p;
  };
  for (Index start = 0; start < n;) {
    Index stop = start + 1;
    while (stop < n && out.eigenvalues[stop - 1] - out.eigenvalues[stop] <= tol) ++stop;
    if (stop - start > 1) {
      std::vector<Index> order(static_cast<std::size_t>(stop - start));
      for (Index c = start; c < stop; ++c) order[static_cast<std::size_t>(c - start)] = c;
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return peak(a) < peak(b); });
      const Mat<Scalar> block = out.eigenvectors.middleCols(start, stop - start);
      for (Index c = start; c < stop; ++c)
        out.eigenvectors.col(c) = block.col(order[static_cast<std::size_t>(c - start)] - start);
    }
    start = stop;
  }
  return out;
}

template <typename Scalar>
SvdResult<Scalar> svd(const Mat<Scalar>& A) {
  if (!A.allFinite()) throw DataError("svd: non-finite entry");
  SvdResult<Scalar> out;
  const Index p = std::min(A.rows(), A.cols());
  if (p == 0) {
    out.U = Mat<Scalar>(A.rows(), 0);
    out.V = Mat<Scalar>(A.cols(), 0);
    return out;
  }
  Eigen::JacobiSVD<Mat<Scalar>> js(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = js.matrixU();
  out.singular_values = js.singularValues();
  out.V = js.matrixV();
  for (Index c = 0; c < p; ++c) {
    const Scalar s = canonical_sign(out.U.col(c));
    out.U.col(c) *= s;
    out.V.col(c) *= s;
  }
  return out;
}

/// Number of singular values above eps * sigma_1 * max(m, n).
template <typename Scalar>
Index numerical_rank(const Vec<Scalar>& sigma, Index m, Index n) {
  if (sigma.size() == 0 || !(sigma[0] > Scalar(0))) return 0;
  const Scalar tol = std::numeric_limits<Scalar>::epsilon() * sigma[0] * Scalar(std::max(m, n));
  Index r = 0;
  for (Index k = 0; k < sigma.size(); ++k)
    if (sigma[k] > tol) ++r;
  return r;
}

/// Moore-Penrose inverse of a symmetric positive semidefinite matrix, with
/// eigenvalues below the numerical-rank threshold treated as zero. The rank
/// kept is written to `rank` when given.
template <typename Scalar>
Mat<Scalar> pinv_gram(const Mat<Scalar>& G, Index* rank = nullptr) {
  const EigResult<Scalar> eig = sym_eig(G);
  const Index n = G.rows();
  // For a symmetric PSD matrix the eigenvalues are its singular values.
  const Vec<Scalar> sigma = eig.eigenvalues.cwiseMax(Scalar(0));
  const Index r = numerical_rank(sigma, n, n);
  if (rank) *rank = r;
  Mat<Scalar> out = Mat<Scalar>::Zero(n, n);
  for (Index k = 0; k < r; ++k)
    out.noalias() += (Scalar(1) / sigma[k]) * eig.eigenvectors.col(k) * eig.eigenvectors.col(k).transpose();
  return out;
}

/// Orthonormal basis of range(A), truncated at the numerical rank.
template <typename Scalar>
Mat<Scalar> range_basis(const Mat<Scalar>& A) {
  const SvdResult<Scalar> s = svd(A);
  const Index r = numerical_rank(s.singular_values, A.rows(), A.cols());
  return s.U.leftCols(r);
}

}  // namespace cpcp
