// The reduced least-squares functional: for fixed (B, C) the factor A has the
// closed-form minimizer tucker_23(T, B, C) * G^+, and the remaining objective
// depends on (B, C) only through the range of their Khatri-Rao product.
//
// Three independent evaluations are provided:
//   jred_direct    solve for A, then evaluate the residual;
//   jred_trace     1/2 (|T|^2 - sum_r <u_r, M u_r>) with u_r spanning range(B kr C);
//   jred_spectral  eigen-weighted distances of the matricized eigenvectors of M
//                  to that range.
#pragma once

#include "cpcp/spectra.hpp"
#include "cpcp/tensor.hpp"

#include <vector>

namespace cpcp {

template <typename Scalar>
struct GramianG {
  Mat<Scalar> matrix;
  Mat<Scalar> pseudo_inverse;
};

/// Singular-value summary of a Khatri-Rao matrix, recorded by solvers to
/// watch for rank collapse.
template <typename Scalar>
struct KrRankInfo {
  Scalar sigma_max = 0;
  Scalar sigma_min = 0;
  Index rank = 0;

  bool degenerate(Scalar ratio = Scalar(1e-12)) const { return !(sigma_min >= ratio * sigma_max); }
};

template <typename Scalar>
KrRankInfo<Scalar> kr_rank_info(const Mat<Scalar>& B, const Mat<Scalar>& C) {
  const Mat<Scalar> kr = khatri_rao(B, C);
  const SvdResult<Scalar> s = svd(kr);
  KrRankInfo<Scalar> info;
  if (s.singular_values.size() == 0) return info;
  info.sigma_max = s.singular_values[0];
  info.sigma_min = s.singular_values[s.singular_values.size() - 1];
  info.rank = numerical_rank(s.singular_values, kr.rows(), kr.cols());
  return info;
}

/// Hadamard product of the two small Grams, (B^T B) .* (C^T C).
template <typename Scalar>
GramianG<Scalar> gramian(const Mat<Scalar>& B, const Mat<Scalar>& C) {
  if (B.cols() != C.cols()) throw DimensionError("gramian: column counts differ");
  GramianG<Scalar> g;
  g.matrix = (B.transpose() * B).cwiseProduct(C.transpose() * C);
  g.pseudo_inverse = pinv_gram(g.matrix);
  return g;
}

/// Eliminated factor: the least-squares minimizer over A for fixed (B, C).
template <typename Scalar>
Mat<Scalar> solve_A(const Tensor3<Scalar>& T, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  if (B.rows() != T.J() || C.rows() != T.K() || B.cols() != C.cols())
    throw DimensionError("solve_A: dimension mismatch");
  return tucker_23(T, B, C) * gramian(B, C).pseudo_inverse;
}

/// 1/2 |T - sum_r a_r o b_r o c_r|_F^2, evaluated on the explicit residual.
template <typename Scalar>
Scalar objective(const Tensor3<Scalar>& T, const FactorSet<Scalar>& F) {
  F.validate(T.dims());
  const Mat<Scalar> residual = T.slab_matrix() - F.A * khatri_rao(F.B, F.C).transpose();
  return residual.squaredNorm() / Scalar(2);
}

/// M(vec(a,b), vec(c,d)) = sum_i T(i,a,b) T(i,c,d), with its eigenpairs.
template <typename Scalar>
struct ContractionKernel {
  Index J = 0;
  Index K = 0;
  Scalar frobenius_sq = 0;              // |T|_F^2
  Mat<Scalar> M;                        // JK x JK, symmetric PSD
  EigResult<Scalar> eig;                // nonincreasing eigenvalues
  std::vector<Mat<Scalar>> eigen_slices;  // eigenvector i reshaped to J x K

  Index size() const { return J * K; }
  Scalar lambda(Index i) const { return eig.eigenvalues[i]; }
};

template <typename Scalar>
ContractionKernel<Scalar> build_kernel(const Tensor3<Scalar>& T) {
  ContractionKernel<Scalar> kern;
  kern.J = T.J();
  kern.K = T.K();
  kern.frobenius_sq = frobenius_sq(T);
  const auto X = T.slab_matrix();
  kern.M.noalias() = X.transpose() * X;
  kern.eig = sym_eig(kern.M);
  const Index n = kern.size();
  kern.eigen_slices.reserve(static_cast<std::size_t>(n));
  for (Index c = 0; c < n; ++c)
    kern.eigen_slices.emplace_back(Eigen::Map<const Mat<Scalar>>(kern.eig.eigenvectors.col(c).data(), kern.J, kern.K));
  return kern;
}

template <typename Scalar>
Scalar jred_direct(const Tensor3<Scalar>& T, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  return objective(T, FactorSet<Scalar>{solve_A(T, B, C), B, C});
}

namespace detail {
template <typename Scalar>
void check_kernel_factors(const ContractionKernel<Scalar>& kern, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  if (B.rows() != kern.J || C.rows() != kern.K || B.cols() != C.cols())
    throw DimensionError("reduced functional: factor shapes do not match the kernel");
}
}  // namespace detail

/// Orthonormal basis of range(B kr C), truncated at the numerical rank.
template <typename Scalar>
Mat<Scalar> kr_range_basis(const Mat<Scalar>& B, const Mat<Scalar>& C) {
  return range_basis(khatri_rao(B, C));
}

/// Orthogonal projector onto range(B kr C).
template <typename Scalar>
Mat<Scalar> kr_projector(const Mat<Scalar>& B, const Mat<Scalar>& C) {
  const Mat<Scalar> U = kr_range_basis(B, C);
  return U * U.transpose();
}

/// sum_r <u_r, M u_r> for orthonormal columns u_r.
template <typename Scalar>
Scalar rayleigh_value(const ContractionKernel<Scalar>& kern, const Mat<Scalar>& U) {
  if (U.rows() != kern.size()) throw DimensionError("rayleigh_value: row count must be J*K");
  const Mat<Scalar> gram = U.transpose() * U;
  if ((gram - Mat<Scalar>::Identity(U.cols(), U.cols())).norm() > Scalar(1e-8))
    throw std::invalid_argument("rayleigh_value: columns are not orthonormal");
  return (U.transpose() * kern.M * U).trace();
}

template <typename Scalar>
Scalar jred_trace(const ContractionKernel<Scalar>& kern, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  detail::check_kernel_factors(kern, B, C);
  const Mat<Scalar> U = kr_range_basis(B, C);
  return (kern.frobenius_sq - rayleigh_value(kern, U)) / Scalar(2);
}

template <typename Scalar>
Scalar jred_trace(const Tensor3<Scalar>& T, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  return jred_trace(build_kernel(T), B, C);
}

/// Both spectral forms of the reduced functional.
template <typename Scalar>
struct SpectralJred {
  Scalar overlap_form = 0;   // 1/2 sum_i lambda_i (1 - sum_r <v_i, u_r>^2)
  Scalar distance_form = 0;  // 1/2 sum_i lambda_i |V_i - KR(B, C)|_F^2

  Scalar value() const { return distance_form; }
};

template <typename Scalar>
SpectralJred<Scalar> jred_spectral(const ContractionKernel<Scalar>& kern, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  detail::check_kernel_factors(kern, B, C);
  const Mat<Scalar> U = kr_range_basis(B, C);
  const Mat<Scalar>& V = kern.eig.eigenvectors;
  const Mat<Scalar> overlaps = U.transpose() * V;  // (r, i) = <u_r, v_i>
  const Mat<Scalar> residual = V - U * overlaps;  // v_i minus its projection
  SpectralJred<Scalar> out;
  for (Index i = 0; i < kern.size(); ++i) {
    const Scalar lam = kern.lambda(i);
    out.overlap_form += lam * (Scalar(1) - overlaps.col(i).squaredNorm());
    out.distance_form += lam * residual.col(i).squaredNorm();
  }
  out.overlap_form /= Scalar(2);
  out.distance_form /= Scalar(2);
  return out;
}

}  // namespace cpcp
