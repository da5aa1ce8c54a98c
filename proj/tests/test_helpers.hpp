#pragma once

#include "cpcp/tensor.hpp"

#include <Eigen/QR>

#include <random>

namespace testing_util {

inline cpcp::MatrixXd rand_mat(cpcp::Index r, cpcp::Index c, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> n(0, 1);
  cpcp::MatrixXd X(r, c);
  for (cpcp::Index j = 0; j < c; ++j)
    for (cpcp::Index i = 0; i < r; ++i) X(i, j) = n(g);
  return X;
}

inline cpcp::Tensor3d rand_tensor(cpcp::Index I, cpcp::Index J, cpcp::Index K, unsigned seed) {
  const cpcp::MatrixXd v = rand_mat(I * J * K, 1, seed);
  return cpcp::Tensor3d(I, J, K, v.col(0));
}

inline cpcp::Tensor3d diagonal_222() {
  cpcp::Tensor3d T(2, 2, 2);
  T(0, 0, 0) = 1;
  T(1, 1, 1) = 1;
  return T;
}

inline cpcp::MatrixXd e(cpcp::Index n, cpcp::Index k) {
  cpcp::MatrixXd v = cpcp::MatrixXd::Zero(n, 1);
  v(k, 0) = 1;
  return v;
}

inline cpcp::MatrixXd random_orthogonal(cpcp::Index n, unsigned seed) {
  Eigen::HouseholderQR<cpcp::MatrixXd> qr(rand_mat(n, n, seed));
  return qr.householderQ() * cpcp::MatrixXd::Identity(n, n);
}

}  // namespace testing_util
