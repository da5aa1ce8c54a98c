// Dense third-order tensors, factor sets, and the multilinear products used
// throughout the library.
//
// Index conventions
// -----------------
// A Tensor3 of size I x J x K stores entry (i, j, k) at offset
// i + I * (j + J * k), i.e. the first index runs fastest. Every
// vectorization in the library follows the same rule: the vec of a J x K
// matrix X places X(j, k) at j + J * k, and column r of khatri_rao(B, C)
// is vec(b_r o c_r), so row j + J * k holds B(j, r) * C(k, r).
//
// With this layout the raw storage read as an I x JK column-major matrix is
// the transpose of the mode-1 unfolding, and read as an IJ x K matrix it is
// the mode-3 unfolding.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cpcp {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Mat<double>;
using VectorXd = Vec<double>;

/// Raised when operand shapes do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for unusable data: non-finite values, empty spectra, parse errors.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dims3 {
  Index I = 0;
  Index J = 0;
  Index K = 0;

  Index operator[](int mode) const { return mode == 0 ? I : (mode == 1 ? J : K); }
  Index size() const { return I * J * K; }
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

template <typename Scalar>
class Tensor3 {
 public:
  using MatrixType = Mat<Scalar>;
  using VectorType = Vec<Scalar>;

  Tensor3() = default;

  /// Zero tensor of the given size.
  Tensor3(Index I, Index J, Index K) : dims_{I, J, K} {
    check_dims();
    data_ = VectorType::Zero(dims_.size());
  }

  /// Tensor from values in storage order (i fastest, then j, then k).
  Tensor3(Index I, Index J, Index K, VectorType values) : dims_{I, J, K}, data_(std::move(values)) {
    check_dims();
    if (data_.size() != dims_.size()) {
      throw DimensionError("tensor3: expected " + std::to_string(dims_.size()) + " values, got " +
                           std::to_string(data_.size()));
    }
    if (!data_.allFinite()) throw DataError("tensor3: non-finite value");
  }

  const Dims3& dims() const { return dims_; }
  Index I() const { return dims_.I; }
  Index J() const { return dims_.J; }
  Index K() const { return dims_.K; }
  Index size() const { return data_.size(); }

  Scalar operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }
  Scalar& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }

  const VectorType& data() const { return data_; }

  template <typename To>
  Tensor3<To> cast() const {
    return Tensor3<To>(dims_.I, dims_.J, dims_.K, data_.template cast<To>());
  }

  /// Storage viewed as I x JK; column j + J*k is the mode-1 fiber T(:, j, k).
  Eigen::Map<const MatrixType> slab_matrix() const { return {data_.data(), dims_.I, dims_.J * dims_.K}; }

  Tensor3& operator+=(const Tensor3& other) {
    require_same_dims(other, "tensor3 +=");
    data_ += other.data_;
    return *this;
  }
  Tensor3& operator-=(const Tensor3& other) {
    require_same_dims(other, "tensor3 -=");
    data_ -= other.data_;
    return *this;
  }
  Tensor3& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }
  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Scalar s, Tensor3 a) { return a *= s; }

  void require_same_dims(const Tensor3& other, const char* what) const {
    if (!(dims_ == other.dims_)) throw DimensionError(std::string(what) + ": dimension mismatch");
  }

 private:
  Index offset(Index i, Index j, Index k) const { return i + dims_.I * (j + dims_.J * k); }

  void check_dims() const {
    if (dims_.I <= 0 || dims_.J <= 0 || dims_.K <= 0) throw DimensionError("tensor3: dimensions must be positive");
  }

  Dims3 dims_;
  VectorType data_;
};

using Tensor3d = Tensor3<double>;

/// Factor matrices (A, B, C) of a rank-R CP model.
template <typename Scalar>
struct FactorSet {
  Mat<Scalar> A;
  Mat<Scalar> B;
  Mat<Scalar> C;

  Index rank() const { return A.cols(); }
  const Mat<Scalar>& factor(int mode) const { return mode == 0 ? A : (mode == 1 ? B : C); }
  Mat<Scalar>& factor(int mode) { return mode == 0 ? A : (mode == 1 ? B : C); }

  void validate() const {
    if (A.cols() < 1) throw DimensionError("factors: rank must be at least 1");
    if (B.cols() != A.cols() || C.cols() != A.cols()) throw DimensionError("factors: column counts differ");
  }
  void validate(const Dims3& dims) const {
    validate();
    if (A.rows() != dims.I || B.rows() != dims.J || C.rows() != dims.K)
      throw DimensionError("factors: row counts do not match tensor dimensions");
  }
};

using FactorSetd = FactorSet<double>;

template <typename Scalar>
Tensor3<Scalar> outer3(const Vec<Scalar>& a, const Vec<Scalar>& b, const Vec<Scalar>& c) {
  if (a.size() == 0 || b.size() == 0 || c.size() == 0) throw DimensionError("outer3: empty vector");
  Tensor3<Scalar> t(a.size(), b.size(), c.size());
  for (Index k = 0; k < c.size(); ++k)
    for (Index j = 0; j < b.size(); ++j)
      for (Index i = 0; i < a.size(); ++i) t(i, j, k) = a[i] * b[j] * c[k];
  return t;
}

/// Columnwise Kronecker product; row j + J*k of column r is B(j,r) * C(k,r).
template <typename DerivedB, typename DerivedC>
Mat<typename DerivedB::Scalar> khatri_rao(const Eigen::MatrixBase<DerivedB>& B, const Eigen::MatrixBase<DerivedC>& C) {
  using Scalar = typename DerivedB::Scalar;
  if (B.cols() != C.cols()) throw DimensionError("khatri_rao: column counts differ");
  const Index J = B.rows();
  const Index K = C.rows();
  Mat<Scalar> out(J * K, B.cols());
  for (Index r = 0; r < B.cols(); ++r)
    for (Index k = 0; k < K; ++k) out.col(r).segment(k * J, J) = C(k, r) * B.col(r);
  return out;
}

/// Combined mode-2/3 product: result(i, r) = sum_jk T(i,j,k) B(j,r) C(k,r).
template <typename Scalar>
Mat<Scalar> tucker_23(const Tensor3<Scalar>& T, const Mat<Scalar>& B, const Mat<Scalar>& C) {
  if (B.rows() != T.J() || C.rows() != T.K()) throw DimensionError("tucker_23: dimension mismatch");
  return T.slab_matrix() * khatri_rao(B, C);
}

/// Matricization. mode 1 -> JK x I (j fastest), mode 2 -> KI x J (k fastest),
/// mode 3 -> IJ x K (i fastest).
template <typename Scalar>
Mat<Scalar> unfold(const Tensor3<Scalar>& T, int mode) {
  const Index I = T.I(), J = T.J(), K = T.K();
  switch (mode) {
    case 1:
      return T.slab_matrix().transpose();
    case 2: {
      Mat<Scalar> out(K * I, J);
      for (Index k = 0; k < K; ++k)
        for (Index j = 0; j < J; ++j)
          for (Index i = 0; i < I; ++i) out(k + K * i, j) = T(i, j, k);
      return out;
    }
    case 3:
      return Eigen::Map<const Mat<Scalar>>(T.data().data(), I * J, K);
    default:
      throw std::invalid_argument("unfold: mode must be 1, 2 or 3");
  }
}

/// Inverse of unfold for a tensor of the given dimensions.
template <typename Scalar>
Tensor3<Scalar> refold(const Mat<Scalar>& X, int mode, const Dims3& dims) {
  const Index I = dims.I, J = dims.J, K = dims.K;
  Tensor3<Scalar> t(I, J, K);
  auto expect = [&](Index rows, Index cols) {
    if (X.rows() != rows || X.cols() != cols) throw DimensionError("refold: matrix shape does not match dimensions");
  };
  switch (mode) {
    case 1:
      expect(J * K, I);
      for (Index k = 0; k < K; ++k)
        for (Index j = 0; j < J; ++j)
          for (Index i = 0; i < I; ++i) t(i, j, k) = X(j + J * k, i);
      break;
    case 2:
      expect(K * I, J);
      for (Index k = 0; k < K; ++k)
        for (Index j = 0; j < J; ++j)
          for (Index i = 0; i < I; ++i) t(i, j, k) = X(k + K * i, j);
      break;
    case 3:
      expect(I * J, K);
      for (Index k = 0; k < K; ++k)
        for (Index j = 0; j < J; ++j)
          for (Index i = 0; i < I; ++i) t(i, j, k) = X(i + I * j, k);
      break;
    default:
      throw std::invalid_argument("refold: mode must be 1, 2 or 3");
  }
  return t;
}

/// Cyclic reindexing that moves mode `shift` (0, 1 or 2) to the front:
/// shift 1 gives T'(j,k,i) = T(i,j,k), shift 2 gives T''(k,i,j) = T(i,j,k).
template <typename Scalar>
Tensor3<Scalar> rotate_modes(const Tensor3<Scalar>& T, int shift) {
  if (shift == 0) return T;
  const Dims3 d = T.dims();
  const Dims3 nd{d[shift], d[(shift + 1) % 3], d[(shift + 2) % 3]};
  Tensor3<Scalar> out(nd.I, nd.J, nd.K);
  std::array<Index, 3> idx{};
  for (idx[2] = 0; idx[2] < d.K; ++idx[2])
    for (idx[1] = 0; idx[1] < d.J; ++idx[1])
      for (idx[0] = 0; idx[0] < d.I; ++idx[0])
        out(idx[shift], idx[(shift + 1) % 3], idx[(shift + 2) % 3]) = T(idx[0], idx[1], idx[2]);
  return out;
}

/// The factor set seen from rotate_modes(T, shift).
template <typename Scalar>
FactorSet<Scalar> rotate_factors(const FactorSet<Scalar>& F, int shift) {
  return {F.factor(shift), F.factor((shift + 1) % 3), F.factor((shift + 2) % 3)};
}

/// Undo rotate_factors.
template <typename Scalar>
FactorSet<Scalar> unrotate_factors(const FactorSet<Scalar>& F, int shift) {
  FactorSet<Scalar> out;
  out.factor(shift) = F.A;
  out.factor((shift + 1) % 3) = F.B;
  out.factor((shift + 2) % 3) = F.C;
  return out;
}

/// Matricized tensor times Khatri-Rao product for `mode` in {0,1,2}:
/// contracts every mode except `mode` against the matching factors.
template <typename Scalar>
Mat<Scalar> mttkrp(const Tensor3<Scalar>& T, int mode, const FactorSet<Scalar>& F) {
  switch (mode) {
    case 0:
      return tucker_23(T, F.B, F.C);
    case 1:
      if (F.A.rows() != T.I() || F.C.rows() != T.K()) throw DimensionError("mttkrp: dimension mismatch");
      return unfold(T, 2).transpose() * khatri_rao(F.C, F.A);
    case 2:
      if (F.A.rows() != T.I() || F.B.rows() != T.J()) throw DimensionError("mttkrp: dimension mismatch");
      return unfold(T, 3).transpose() * khatri_rao(F.A, F.B);
    default:
      throw std::invalid_argument("mttkrp: mode must be 0, 1 or 2");
  }
}

/// sum_r a_r o b_r o c_r
template <typename Scalar>
Tensor3<Scalar> reconstruct(const FactorSet<Scalar>& F) {
  F.validate();
  const Index I = F.A.rows(), J = F.B.rows(), K = F.C.rows();
  Mat<Scalar> slab = F.A * khatri_rao(F.B, F.C).transpose();
  return Tensor3<Scalar>(I, J, K, Eigen::Map<const Vec<Scalar>>(slab.data(), I * J * K));
}

template <typename Scalar>
Scalar frobenius_sq(const Tensor3<Scalar>& T) {
  return T.data().squaredNorm();
}

template <typename Scalar>
Scalar inner(const Tensor3<Scalar>& T, const Tensor3<Scalar>& L) {
  T.require_same_dims(L, "inner");
  return T.data().dot(L.data());
}

}  // namespace cpcp
