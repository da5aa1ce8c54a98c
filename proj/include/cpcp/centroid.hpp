// Computable bounds on the reduced functional and the Centroid Projection
// initializer.
//
// Writing lambda_i, V_i for the eigenpairs of the contraction kernel (V_i the
// J x K reshaped eigenvector) and sigma_k(X) for singular values:
//
//   lower  = 1/2 sum_i lambda_i sum_{k>R} sigma_k(V_i)^2
//   Vc     = sum_i lambda_i V_i / sum_i lambda_i                   (centroid)
//   upper  = 1/2 [ (1 - |Vc|^2) L + L sum_{k>R} sigma_k(Vc)^2 ]    (L = sum lambda_i)
//   gap    = 1/2 [ sum_i lambda_i sum_{k<=R} sigma_k(V_i)^2 - L sum_{k<=R} sigma_k(Vc)^2 ]
//
// and the leading R singular vector pairs of Vc give factors (B_C, C_C) with
// lower <= inf J_red <= J_red(B_C, C_C) <= upper.
//
// Eigenpairs whose eigenvalue falls below the numerical-rank threshold are
// treated as zero weight and skipped everywhere.
#pragma once

#include "cpcp/reduced.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

namespace cpcp {

namespace detail {

/// Number of leading eigenpairs with numerically nonzero weight.
template <typename Scalar>
Index active_eigenpairs(const ContractionKernel<Scalar>& kern) {
  const Vec<Scalar> lam = kern.eig.eigenvalues.cwiseMax(Scalar(0));
  return numerical_rank(lam, kern.size(), kern.size());
}

template <typename Scalar>
Scalar head_energy(const Vec<Scalar>& sigma, Index R) {
  const Index n = std::min<Index>(R, sigma.size());
  return sigma.head(n).squaredNorm();
}

template <typename Scalar>
Scalar tail_energy(const Vec<Scalar>& sigma, Index R) {
  if (R >= sigma.size()) return Scalar(0);
  return sigma.tail(sigma.size() - R).squaredNorm();
}

template <typename Scalar>
void require_rank(Index R) {
  if (R < 1) throw std::invalid_argument("rank must be at least 1");
}

}  // namespace detail

template <typename Scalar>
Scalar lambda_sum(const ContractionKernel<Scalar>& kern) {
  const Index n = detail::active_eigenpairs(kern);
  return kern.eig.eigenvalues.head(n).sum();
}

template <typename Scalar>
Scalar lower_bound(const ContractionKernel<Scalar>& kern, Index R) {
  detail::require_rank<Scalar>(R);
  if (R >= std::min(kern.J, kern.K)) return Scalar(0);
  const Index n = detail::active_eigenpairs(kern);
  Scalar acc = 0;
  for (Index i = 0; i < n; ++i) {
    const Vec<Scalar> s = svd(kern.eigen_slices[static_cast<std::size_t>(i)]).singular_values;
    acc += kern.lambda(i) * detail::tail_energy(s, R);
  }
  return std::max(Scalar(0), acc / Scalar(2));
}

template <typename Scalar>
Mat<Scalar> centroid(const ContractionKernel<Scalar>& kern) {
  const Index n = detail::active_eigenpairs(kern);
  if (n == 0) throw DataError("centroid: empty spectrum");
  Mat<Scalar> acc = Mat<Scalar>::Zero(kern.J, kern.K);
  Scalar weight = 0;
  for (Index i = 0; i < n; ++i) {
    acc += kern.lambda(i) * kern.eigen_slices[static_cast<std::size_t>(i)];
    weight += kern.lambda(i);
  }
  return acc / weight;
}

template <typename Scalar>
Scalar upper_bound(const ContractionKernel<Scalar>& kern, Index R) {
  detail::require_rank<Scalar>(R);
  const Mat<Scalar> vc = centroid(kern);
  const Scalar L = lambda_sum(kern);
  const Vec<Scalar> s = svd(vc).singular_values;
  return std::max(Scalar(0), (L * (Scalar(1) - vc.squaredNorm()) + L * detail::tail_energy(s, R)) / Scalar(2));
}

template <typename Scalar>
Scalar gap_bound(const ContractionKernel<Scalar>& kern, Index R) {
  detail::require_rank<Scalar>(R);
  const Mat<Scalar> vc = centroid(kern);
  const Index n = detail::active_eigenpairs(kern);
  Scalar head = 0;
  for (Index i = 0; i < n; ++i)
    head += kern.lambda(i) * detail::head_energy(svd(kern.eigen_slices[static_cast<std::size_t>(i)]).singular_values, R);
  return (head - lambda_sum(kern) * detail::head_energy(svd(vc).singular_values, R)) / Scalar(2);
}

/// Bounds and initial factors obtained with one tensor mode eliminated.
template <typename Scalar>
struct ModeCandidate {
  int mode = 0;  // 0-based index of the eliminated factor
  bool feasible = false;
  Scalar objective = 0;
  Scalar lower_bound = 0;
  Scalar upper_bound = 0;
  Scalar gap_bound = 0;
  Scalar centroid_norm = 0;
  Scalar lambda_sum = 0;
};

template <typename Scalar>
struct CentroidBundle {
  Mat<Scalar> centroid;
  SvdResult<Scalar> centroid_svd;
  Scalar lambda_sum = 0;
  Scalar lower_bound = 0;
  Scalar upper_bound = 0;
  Scalar gap_bound = 0;
  FactorSet<Scalar> init_factors;
  int mode_assignment = 0;
  std::vector<ModeCandidate<Scalar>> candidates;  // one per tensor mode
};

namespace detail {

/// Steps 1-5 of Centroid Projection on a tensor whose first mode is the one
/// eliminated. Factors come back in the tensor's own mode order.
template <typename Scalar>
CentroidBundle<Scalar> centroid_projection(const Tensor3<Scalar>& T, Index R) {
  const ContractionKernel<Scalar> kern = build_kernel(T);
  CentroidBundle<Scalar> b;
  b.centroid = cpcp::centroid(kern);
  b.centroid_svd = svd(b.centroid);
  b.lambda_sum = cpcp::lambda_sum(kern);
  b.lower_bound = cpcp::lower_bound(kern, R);
  b.upper_bound = cpcp::upper_bound(kern, R);
  b.gap_bound = cpcp::gap_bound(kern, R);
  b.init_factors.B = b.centroid_svd.U.leftCols(R);
  b.init_factors.C = b.centroid_svd.V.leftCols(R);
  b.init_factors.A = solve_A(T, b.init_factors.B, b.init_factors.C);
  return b;
}

}  // namespace detail

/// Centroid Projection initializer. Each of the three modes is eliminated in
/// turn (modes whose retained dimensions are smaller than R are skipped); the
/// candidate with the smallest objective wins, lowest mode on ties.
template <typename Scalar>
CentroidBundle<Scalar> centroid_init(const Tensor3<Scalar>& T, Index R) {
  detail::require_rank<Scalar>(R);
  if (frobenius_sq(T) == Scalar(0)) throw DataError("centroid_init: zero tensor");
  std::optional<CentroidBundle<Scalar>> best;
  Scalar best_objective = 0;
  std::vector<ModeCandidate<Scalar>> candidates;
  for (int mode = 0; mode < 3; ++mode) {
    const Tensor3<Scalar> view = rotate_modes(T, mode);
    ModeCandidate<Scalar> cand;
    cand.mode = mode;
    if (R > std::min(view.J(), view.K())) {
      candidates.push_back(cand);
      continue;
    }
    CentroidBundle<Scalar> b = detail::centroid_projection(view, R);
    b.init_factors = unrotate_factors(b.init_factors, mode);
    b.mode_assignment = mode;
    cand.feasible = true;
    cand.objective = objective(T, b.init_factors);
    cand.lower_bound = b.lower_bound;
    cand.upper_bound = b.upper_bound;
    cand.gap_bound = b.gap_bound;
    cand.centroid_norm = b.centroid.norm();
    cand.lambda_sum = b.lambda_sum;
    candidates.push_back(cand);
    if (!best || cand.objective < best_objective) {
      best = std::move(b);
      best_objective = cand.objective;
    }
  }
  if (!best) throw DimensionError("centroid_init: rank exceeds min(J,K) for every mode");
  best->candidates = std::move(candidates);
  return *std::move(best);
}

template <typename Scalar>
struct SymmetricInit {
  FactorSet<Scalar> factors;  // B and C identical
  Scalar symmetry_defect = 0;  // |Vc - Vc^T|_F / |Vc|_F
};

/// Centroid Projection with B = C, for tensors symmetric in their last two
/// modes: B_C = C_C are the leading R eigenvectors (by |eigenvalue|) of the
/// symmetrized centroid.
template <typename Scalar>
SymmetricInit<Scalar> centroid_init_symmetric(const Tensor3<Scalar>& T, Index R) {
  detail::require_rank<Scalar>(R);
  if (T.J() != T.K()) throw DimensionError("centroid_init_symmetric: requires J == K");
  if (R > T.J()) throw DimensionError("centroid_init_symmetric: rank exceeds J");
  if (frobenius_sq(T) == Scalar(0)) throw DataError("centroid_init_symmetric: zero tensor");
  const ContractionKernel<Scalar> kern = build_kernel(T);
  const Mat<Scalar> vc = centroid(kern);
  SymmetricInit<Scalar> out;
  out.symmetry_defect = (vc - vc.transpose()).norm() / vc.norm();
  const EigResult<Scalar> eig = sym_eig(Mat<Scalar>((vc + vc.transpose()) / Scalar(2)));
  std::vector<Index> order(static_cast<std::size_t>(eig.eigenvalues.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    using std::abs;
    return abs(eig.eigenvalues[a]) > abs(eig.eigenvalues[b]);
  });
  Mat<Scalar> basis(T.J(), R);
  for (Index r = 0; r < R; ++r) basis.col(r) = eig.eigenvectors.col(order[static_cast<std::size_t>(r)]);
  out.factors.B = basis;
  out.factors.C = basis;
  out.factors.A = solve_A(T, out.factors.B, out.factors.C);
  return out;
}

}  // namespace cpcp
