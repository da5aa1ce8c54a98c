// Seeded synthetic tensors.
#pragma once

#include "cpcp/tensor.hpp"

#include <cstdint>
#include <vector>
#include <string>

namespace cpcp {

enum class GeneratorKind { random_factors, swampy, symmetric, diagonal, noisy };

const char* to_string(GeneratorKind k);
GeneratorKind parse_generator_kind(const std::string& s);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::random_factors;
  Dims3 dims{4, 4, 4};
  Index rank = 2;
  std::uint64_t seed = 0;
  double collinearity = 0.0;  // swampy only, in [0, 1)
  double noise = 0.0;         // noisy only, relative to |T|_F

  void validate() const;
};

struct GeneratedProblem {
  Tensor3d tensor;
  FactorSetd truth;  // noise-free factors
};

/// Factors whose columns share a common direction: column r of each factor is
/// sqrt(c) s + sqrt(1 - c) n_r with unit s and unit n_r orthogonal to s, so
/// the expected cosine between two columns is c.
FactorSetd swampy_factors(const Dims3& dims, Index R, double collinearity, std::uint64_t seed);

/// Pairwise column cosines of X (upper triangle, row-major order).
std::vector<double> column_cosines(const MatrixXd& X);

GeneratedProblem generate(const GeneratorSpec& spec);

}  // namespace cpcp
