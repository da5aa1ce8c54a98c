#include "cpcp/reduced.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

using namespace cpcp;
using namespace testing_util;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

// min_A |X1 - A KR^T| column by column through a dense least-squares solve.
MatrixXd ls_oracle(const Tensor3d& T, const MatrixXd& B, const MatrixXd& C) {
  const MatrixXd KR = khatri_rao(B, C);
  const MatrixXd X1 = T.slab_matrix();
  return KR.completeOrthogonalDecomposition().solve(X1.transpose()).transpose();
}

}  // namespace

TEST_CASE("gramian") {
  const GramianG<double> id = gramian<double>(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2));
  CHECK(id.matrix == MatrixXd::Identity(2, 2));

  MatrixXd b(2, 1), c(2, 1);
  b << 1, 2;
  c << 1, 1;
  CHECK(gramian(b, c).matrix(0, 0) == doctest::Approx(10));

  MatrixXd B = rand_mat(3, 3, 1), C = rand_mat(4, 3, 2);
  B.col(1) = B.col(0);
  C.col(1) = C.col(0);
  const GramianG<double> g = gramian(B, C);
  const MatrixXd KR = khatri_rao(B, C);
  CHECK((g.matrix - KR.transpose() * KR).norm() <= 1e-12 * g.matrix.norm());
  const MatrixXd& G = g.matrix;
  const MatrixXd& P = g.pseudo_inverse;
  CHECK((G * P * G - G).norm() <= 1e-8 * G.norm());
  CHECK((P * G * P - P).norm() <= 1e-8 * P.norm());

  CHECK_THROWS_AS(gramian(B, rand_mat(4, 2, 3)), DimensionError);
}

TEST_CASE("solve_A") {
  VectorXd a(3), b(2), c(3);
  a << 1, -2, 3;
  b << 0.6, 0.8;
  c << 2. / 3, 1. / 3, 2. / 3;
  const Tensor3d T = outer3<double>(a, b, c);
  CHECK((solve_A(T, MatrixXd(b), MatrixXd(c)).col(0) - a).norm() < 1e-14);
  CHECK(solve_A(Tensor3d(3, 2, 3), MatrixXd(b), MatrixXd(c)).isZero(0));

  const Tensor3d R = rand_tensor(3, 4, 5, 5);
  const MatrixXd B = rand_mat(4, 2, 6), C = rand_mat(5, 2, 7);
  const MatrixXd A = solve_A(R, B, C);
  CHECK((A - ls_oracle(R, B, C)).norm() < 1e-9);
  const double best = objective(R, FactorSetd{A, B, C});
  for (unsigned s = 0; s < 20; ++s) {
    const MatrixXd A2 = A + 0.1 * rand_mat(3, 2, 100 + s);
    CHECK(best <= objective(R, FactorSetd{A2, B, C}) + 1e-10);
  }
  CHECK_THROWS_AS(solve_A(R, rand_mat(3, 2, 1), C), DimensionError);
}

TEST_CASE("objective") {
  const FactorSetd F{rand_mat(3, 2, 1), rand_mat(4, 2, 2), rand_mat(5, 2, 3)};
  const Tensor3d T = reconstruct(F);
  CHECK(objective(T, F) < 1e-28);
  const FactorSetd Z{MatrixXd::Zero(3, 2), MatrixXd::Zero(4, 2), MatrixXd::Zero(5, 2)};
  CHECK(objective(T, Z) == doctest::Approx(frobenius_sq(T) / 2));
  const Tensor3d D = diagonal_222();
  CHECK(objective(D, FactorSetd{e(2, 0), e(2, 0), e(2, 0)}) == 0.5);
}

TEST_CASE("build_kernel") {
  Tensor3d S(1, 2, 2);
  S(0, 0, 0) = 1;
  const ContractionKernel<double> ks = build_kernel(S);
  MatrixXd expect = MatrixXd::Zero(4, 4);
  expect(0, 0) = 1;
  CHECK(ks.M == expect);

  const ContractionKernel<double> kd = build_kernel(diagonal_222());
  MatrixXd md = MatrixXd::Zero(4, 4);
  md(0, 0) = 1;  // vec(e1 o e1)
  md(3, 3) = 1;  // vec(e2 o e2)
  CHECK(kd.M == md);
  CHECK(kd.eig.eigenvalues[0] == doctest::Approx(1));
  CHECK(kd.eig.eigenvalues[1] == doctest::Approx(1));
  CHECK(std::abs(kd.eig.eigenvalues[2]) < 1e-15);
  CHECK(std::abs(kd.eig.eigenvalues[3]) < 1e-15);

  const Tensor3d R = rand_tensor(3, 4, 5, 9);
  const ContractionKernel<double> k = build_kernel(R);
  CHECK(rel(k.M.trace(), frobenius_sq(R)) < 1e-10);
  const MatrixXd u1 = unfold(R, 1);
  CHECK((k.M - u1 * u1.transpose()).norm() < 1e-12 * k.M.norm());
  CHECK(k.eig.eigenvalues.minCoeff() >= -1e-9 * k.M.norm());
  // entry check against the contraction loops
  double m = 0;
  for (Index i = 0; i < 3; ++i) m += R(i, 1, 2) * R(i, 3, 0);
  CHECK(k.M(1 + 4 * 2, 3 + 4 * 0) == doctest::Approx(m).epsilon(1e-12));
  // eigen slices follow the vec convention
  for (Index n = 0; n < k.size(); ++n) {
    CHECK(k.eigen_slices[static_cast<std::size_t>(n)].norm() == doctest::Approx(1).epsilon(1e-12));
    CHECK(k.eigen_slices[static_cast<std::size_t>(n)](1, 2) == k.eig.eigenvectors(1 + 4 * 2, n));
  }
  // (b kr c)^T M (b kr c) equals the contraction M(b, c, b, c)
  const MatrixXd b = rand_mat(4, 1, 1), c = rand_mat(5, 1, 2);
  const VectorXd v = khatri_rao(b, c).col(0);
  double loop = 0;
  for (Index i = 0; i < 3; ++i) {
    double s = 0;
    for (Index j = 0; j < 4; ++j)
      for (Index l = 0; l < 5; ++l) s += R(i, j, l) * b(j, 0) * c(l, 0);
    loop += s * s;
  }
  CHECK(rel(v.dot(k.M * v), loop) < 1e-12);
}

TEST_CASE("three evaluators agree") {
  const Tensor3d D = diagonal_222();
  const ContractionKernel<double> kd = build_kernel(D);
  CHECK(jred_direct(D, e(2, 0), e(2, 0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(jred_trace(kd, e(2, 0), e(2, 0)) == doctest::Approx(0.5).epsilon(1e-14));
  const SpectralJred<double> sd = jred_spectral(kd, e(2, 0), e(2, 0));
  CHECK(sd.overlap_form == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sd.distance_form == doctest::Approx(0.5).epsilon(1e-14));

  VectorXd a(2), b(3), c(2);
  a << 1, 2;
  b << 1, 2, 2;
  c << 3, 4;
  const Tensor3d T1 = outer3<double>(a, b, c);
  CHECK(jred_direct(T1, MatrixXd(b), MatrixXd(c)) < 1e-28);

  const Tensor3d Z(3, 3, 3);
  CHECK(jred_spectral(build_kernel(Z), rand_mat(3, 2, 1), rand_mat(3, 2, 2)).value() == 0);

  const Tensor3d R = rand_tensor(3, 3, 3, 21);
  const ContractionKernel<double> k = build_kernel(R);
  for (unsigned s = 0; s < 10; ++s) {
    MatrixXd B = rand_mat(3, 2, 30 + s), C = rand_mat(3, 2, 60 + s);
    if (s == 9) {
      B.col(1) = B.col(0);
      C.col(1) = C.col(0);
    }
    const double d = jred_direct(R, B, C);
    const double t = jred_trace(k, B, C);
    const SpectralJred<double> sp = jred_spectral(k, B, C);
    CHECK(rel(d, t) < 1e-8);
    CHECK(rel(d, sp.overlap_form) < 1e-8);
    CHECK(rel(d, sp.distance_form) < 1e-8);
    CHECK(std::abs(sp.overlap_form - sp.distance_form) < 1e-10);
  }
}

TEST_CASE("basis invariance and KR-range invariance") {
  const Tensor3d R = rand_tensor(4, 3, 3, 8);
  const ContractionKernel<double> k = build_kernel(R);
  const MatrixXd B = rand_mat(3, 2, 1), C = rand_mat(3, 2, 2);
  const MatrixXd U = kr_range_basis(B, C);
  const MatrixXd KR = khatri_rao(B, C);
  // raw-column Rayleigh quotient with the Gram pseudo-inverse
  const double raw = (KR.transpose() * k.M * KR * gramian(B, C).pseudo_inverse).trace();
  CHECK(rel(rayleigh_value(k, U), raw) < 1e-10);

  MatrixXd D = MatrixXd::Zero(2, 2), E = MatrixXd::Zero(2, 2), P = MatrixXd::Zero(2, 2);
  D.diagonal() << -3, 0.25;
  E.diagonal() << 2, -5;
  P << 0, 1, 1, 0;
  CHECK(std::abs(jred_direct(R, B, C) - jred_direct<double>(R, B * D * P, C * E * P)) < 1e-10);
}

TEST_CASE("rayleigh_value") {
  const Tensor3d R = rand_tensor(3, 3, 3, 12);
  const ContractionKernel<double> k = build_kernel(R);
  const MatrixXd top = k.eig.eigenvectors.leftCols(2);
  CHECK(rel(rayleigh_value<double>(k, top), k.eig.eigenvalues.head(2).sum()) < 1e-12);

  const ContractionKernel<double> kd = build_kernel(diagonal_222());
  CHECK(std::abs(rayleigh_value<double>(kd, kd.eig.eigenvectors.rightCols(2))) < 1e-15);

  const MatrixXd U = random_orthogonal(9, 4).leftCols(3);
  const MatrixXd Q = random_orthogonal(3, 5);
  CHECK(std::abs(rayleigh_value(k, U) - rayleigh_value<double>(k, U * Q)) < 1e-10);
  CHECK(rayleigh_value(k, U) <= k.eig.eigenvalues.head(3).sum() + 1e-9);

  CHECK_THROWS_AS(rayleigh_value<double>(k, 2.0 * U), std::invalid_argument);
}

TEST_CASE("doubled pseudo-inverse projector equals the orthogonal projector") {
  for (unsigned s = 0; s < 10; ++s) {
    MatrixXd B = rand_mat(4, 3, s), C = rand_mat(3, 3, s + 50);
    if (s % 3 == 0) {
      B.col(2) = B.col(0);
      C.col(2) = C.col(0);
    }
    const MatrixXd KR = khatri_rao(B, C);
    const MatrixXd Gp = pinv_gram<double>(KR.transpose() * KR);
    const MatrixXd doubled = KR * Gp * KR.transpose() * KR * Gp * KR.transpose();
    CHECK((doubled - kr_projector(B, C)).norm() < 1e-8);
  }
}

TEST_CASE("rank monitor") {
  MatrixXd B = rand_mat(4, 2, 1), C = rand_mat(4, 2, 2);
  const KrRankInfo<double> full = kr_rank_info(B, C);
  CHECK(full.rank == 2);
  CHECK_FALSE(full.degenerate());
  B.col(1) = B.col(0);
  C.col(1) = C.col(0);
  const KrRankInfo<double> dup = kr_rank_info(B, C);
  CHECK(dup.rank == 1);
  CHECK(dup.degenerate());
}
