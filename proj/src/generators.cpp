#include "cpcp/generators.hpp"

#include "cpcp/solvers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace cpcp {

const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::random_factors: return "random_factors";
    case GeneratorKind::swampy: return "swampy";
    case GeneratorKind::symmetric: return "symmetric";
    case GeneratorKind::diagonal: return "diagonal";
    case GeneratorKind::noisy: return "noisy";
  }
  return "?";
}

GeneratorKind parse_generator_kind(const std::string& s) {
  if (s == "random_factors") return GeneratorKind::random_factors;
  if (s == "swampy") return GeneratorKind::swampy;
  if (s == "symmetric") return GeneratorKind::symmetric;
  if (s == "diagonal") return GeneratorKind::diagonal;
  if (s == "noisy") return GeneratorKind::noisy;
  throw std::invalid_argument("unknown generator kind '" + s + "'");
}

void GeneratorSpec::validate() const {
  if (dims.I < 1 || dims.J < 1 || dims.K < 1) throw DimensionError("generator: dimensions must be positive");
  if (rank < 1) throw std::invalid_argument("generator: rank must be at least 1");
  if (!(collinearity >= 0.0 && collinearity < 1.0)) throw std::invalid_argument("generator: collinearity must lie in [0,1)");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw std::invalid_argument("generator: noise must be nonnegative");
  if (kind == GeneratorKind::symmetric && !(dims.I == dims.J && dims.J == dims.K))
    throw DimensionError("generator: symmetric kind needs I = J = K");
  if (kind == GeneratorKind::diagonal && rank > std::min({dims.I, dims.J, dims.K}))
    throw DimensionError("generator: diagonal kind needs rank <= min(I, J, K)");
}

FactorSetd swampy_factors(const Dims3& dims, Index R, double collinearity, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Index n) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };
  const double ws = std::sqrt(collinearity), wn = std::sqrt(1.0 - collinearity);
  FactorSetd F;
  for (int m = 0; m < 3; ++m) {
    const Index n = dims[m];
    MatrixXd& X = F.factor(m);
    X.resize(n, R);
    const VectorXd s = draw(n).normalized();
    for (Index r = 0; r < R; ++r) {
      VectorXd v = draw(n);
      if (n > 1) {
        v -= s.dot(v) * s;
        v.normalize();
      }
      X.col(r) = n > 1 ? VectorXd(ws * s + wn * v) : s;
      X.col(r).normalize();
    }
  }
  return F;
}

std::vector<double> column_cosines(const MatrixXd& X) {
  std::vector<double> out;
  for (Index p = 0; p < X.cols(); ++p)
    for (Index q = p + 1; q < X.cols(); ++q) out.push_back(X.col(p).dot(X.col(q)) / (X.col(p).norm() * X.col(q).norm()));
  return out;
}

namespace {

// Every permutation of (i, j, k) gets the value computed for the sorted
// triple, so the result is symmetric to the last bit.
Tensor3d symmetric_assemble(const MatrixXd& A) {
  const Index n = A.rows();
  Tensor3d T(n, n, n);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) {
        std::array<Index, 3> s{i, j, k};
        std::sort(s.begin(), s.end());
        double v = 0;
        for (Index r = 0; r < A.cols(); ++r) v += A(s[0], r) * A(s[1], r) * A(s[2], r);
        T(i, j, k) = v;
      }
  return T;
}

}  // namespace

GeneratedProblem generate(const GeneratorSpec& spec) {
  spec.validate();
  GeneratedProblem out;
  switch (spec.kind) {
    case GeneratorKind::random_factors:
    case GeneratorKind::noisy:
      out.truth = random_factors<double>(spec.dims, spec.rank, spec.seed);
      out.tensor = reconstruct(out.truth);
      break;
    case GeneratorKind::swampy:
      out.truth = swampy_factors(spec.dims, spec.rank, spec.collinearity, spec.seed);
      out.tensor = reconstruct(out.truth);
      break;
    case GeneratorKind::symmetric: {
      const FactorSetd F = random_factors<double>(spec.dims, spec.rank, spec.seed);
      out.truth = {F.A, F.A, F.A};
      out.tensor = symmetric_assemble(F.A);
      break;
    }
    case GeneratorKind::diagonal: {
      for (int m = 0; m < 3; ++m) out.truth.factor(m) = MatrixXd::Identity(spec.dims[m], spec.rank);
      out.tensor = reconstruct(out.truth);
      break;
    }
  }
  if (spec.kind == GeneratorKind::noisy && spec.noise > 0) {
    // noise stream kept apart from the factor stream
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = spec.noise * std::sqrt(frobenius_sq(out.tensor) / double(out.tensor.size()));
    VectorXd noisy = out.tensor.data();
    for (Index n = 0; n < noisy.size(); ++n) noisy[n] += sd * normal(rng);
    out.tensor = Tensor3d(spec.dims.I, spec.dims.J, spec.dims.K, std::move(noisy));
  }
  return out;
}

}  // namespace cpcp
