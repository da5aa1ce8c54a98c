#include "cpcp/harness.hpp"

#include "test_helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cpcp;
using namespace testing_util;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cpcp_test_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("tensor file round trip is exact") {
  Tensor3d T = rand_tensor(3, 4, 2, 11);
  T(0, 0, 0) = 1.0 / 3.0;
  T(2, 3, 1) = -5e-310;  // subnormal
  T(1, 2, 0) = 1e300;
  std::stringstream ss;
  io::write_tensor(ss, T);
  const std::string text = ss.str();
  CHECK(text.rfind("tensor3 3 4 2\n", 0) == 0);
  const Tensor3d U = io::read_tensor(ss);
  CHECK(U.dims() == T.dims());
  CHECK(U.data() == T.data());

  const fs::path dir = scratch_dir("tensor");
  io::write_tensor(dir / "t.txt", T);
  CHECK(io::read_tensor(dir / "t.txt").data() == T.data());
}

TEST_CASE("tensor file layout") {
  std::istringstream is("tensor3 2 2 1\n1 2\n3 4\n");
  const Tensor3d T = io::read_tensor(is);
  CHECK(T(0, 0, 0) == 1);
  CHECK(T(1, 0, 0) == 2);
  CHECK(T(0, 1, 0) == 3);
  CHECK(T(1, 1, 0) == 4);
}

TEST_CASE("tensor parse errors") {
  auto parse = [](const std::string& s) {
    std::istringstream is(s);
    return io::read_tensor(is);
  };
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_AS(parse("matrix 2 2 2"), DataError);
  CHECK_THROWS_AS(parse("tensor3 2 0 2"), DataError);
  CHECK_THROWS_AS(parse("tensor3 1 1 2\n1"), DataError);
  CHECK_THROWS_AS(parse("tensor3 1 1 2\n1 x"), DataError);
  CHECK_THROWS_AS(parse("tensor3 1 1 1\n1 2"), DataError);
  CHECK_THROWS_AS(parse("tensor3 1 1 1\nnan"), DataError);
  CHECK_THROWS_AS(io::read_tensor(fs::path("/nonexistent/t.txt")), DataError);
}

TEST_CASE("factor file round trip is exact") {
  FactorSetd F = random_factors<double>({3, 4, 5}, 2, 9);
  F.A(0, 0) = 0.1;
  std::stringstream ss;
  io::write_factors(ss, F);
  CHECK(ss.str().rfind("factors 3 4 5 2\n", 0) == 0);
  const FactorSetd G = io::read_factors(ss);
  CHECK(G.A == F.A);
  CHECK(G.B == F.B);
  CHECK(G.C == F.C);

  std::istringstream bad("factors 1 1 1 1\n1\n\n2\n");
  CHECK_THROWS_AS(io::read_factors(bad), DataError);
}

TEST_CASE("trace writer and reader") {
  const Tensor3d T = rand_tensor(3, 3, 3, 2);
  SolverConfig cfg;
  cfg.rank = 2;
  cfg.max_iters = 7;
  const Decomposition<double> d = decompose(T, cfg);
  std::stringstream ss;
  io::write_trace(ss, d.trace, false);

  std::istringstream lines(ss.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    ++n;
    CHECK(j.at("iter").get<int>() == n);
    CHECK(j.at("wall_ms").get<double>() == 0);
    for (const char* key : {"objective", "jred", "sigma_min", "kr_rank", "alpha", "step", "flags"}) CHECK(j.contains(key));
    CHECK(j.at("sigma_min").size() == 3);
    CHECK(j.at("flags").contains("stall"));
  }
  CHECK(n == static_cast<int>(d.trace.size()));

  const ConvergenceTrace<double> back = io::read_trace(ss);
  REQUIRE(back.size() == d.trace.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back.records[k].objective == d.trace.records[k].objective);
    CHECK(back.records[k].sigma_min == d.trace.records[k].sigma_min);
    CHECK(back.records[k].kr_rank == d.trace.records[k].kr_rank);
    CHECK(back.records[k].flags.stall == d.trace.records[k].flags.stall);
  }
}

TEST_CASE("history writer and reader") {
  io::History h;
  h.iterates = {random_factors<double>({2, 3, 4}, 2, 1), random_factors<double>({2, 3, 4}, 2, 2)};
  h.objectives = {1.5, 0.25};
  std::stringstream ss;
  io::write_history(ss, h);
  const io::History g = io::read_history(ss);
  REQUIRE(g.iterates.size() == 2);
  CHECK(g.objectives == h.objectives);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(g.iterates[k].A == h.iterates[k].A);
    CHECK(g.iterates[k].B == h.iterates[k].B);
    CHECK(g.iterates[k].C == h.iterates[k].C);
  }
  std::istringstream broken("{\"iter\": 1, \"objective\": 1}\n");
  CHECK_THROWS_AS(io::read_history(broken), DataError);
  CHECK_THROWS_AS(io::read_history(fs::path("/nonexistent/h.jsonl")), DataError);
}

TEST_CASE("swamp report writer uses null for singular pairs") {
  const FactorSetd F = random_factors<double>({3, 3, 3}, 2, 1);
  const SwampReport<double> rep = swamp_report<double>({F, F}, {1.0, 1.0});
  std::stringstream ss;
  io::write_swamp_report(ss, rep);
  const auto j = nlohmann::json::parse(ss.str());
  CHECK(j.at("iter").get<int>() == 1);
  CHECK(j.at("condition").at(0).is_null());
  CHECK(j.at("subspace_distance").at(2).get<double>() < 1e-15);
}

TEST_CASE("config files") {
  std::istringstream is("# solver\nmethod = lsals\nrank=3\ninit=centroid\ntol_stall=1e-9  # looser\nsymmetric=true\n\n");
  SolverConfig cfg;
  io::apply_config(cfg, io::read_key_values(is));
  CHECK(cfg.method == Method::lsals);
  CHECK(cfg.rank == 3);
  CHECK(cfg.init == InitKind::centroid);
  CHECK(cfg.tol_stall == 1e-9);
  CHECK(cfg.symmetric);
  CHECK(cfg.max_iters == 1000);

  auto apply = [](const std::string& text) {
    std::istringstream s(text);
    SolverConfig c;
    io::apply_config(c, io::read_key_values(s));
    return c;
  };
  CHECK_THROWS_AS(apply("bogus=1"), std::invalid_argument);
  CHECK_THROWS_AS(apply("rank"), std::invalid_argument);
  CHECK_THROWS_AS(apply("rank=2.5"), std::invalid_argument);
  CHECK_THROWS_AS(apply("method=newton"), std::invalid_argument);
  CHECK_THROWS_AS(apply("symmetric=maybe"), std::invalid_argument);

  const fs::path dir = scratch_dir("config");
  std::ofstream(dir / "c.cfg") << "max_iters=17\n";
  SolverConfig base;
  base.rank = 2;
  const SolverConfig r = io::read_config(dir / "c.cfg", base);
  CHECK(r.max_iters == 17);
  CHECK(r.rank == 2);
}

TEST_CASE("format_double round trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) CHECK(std::stod(io::format_double(x)) == x);
}

TEST_CASE("diagonal generator gives the worked tensor") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::diagonal;
  spec.dims = {2, 2, 2};
  spec.rank = 2;
  const GeneratedProblem p = generate(spec);
  CHECK(p.tensor.data() == diagonal_222().data());
}

TEST_CASE("swampy generator with c = 0 has small cosines") {
  // At c = 0 the columns are uniform on the unit sphere of the complement of
  // the shared direction (dimension d = n - 1), where
  // E|cos| = Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2)).
  for (Index n : {8, 16}) {
    double sum = 0, sum_abs = 0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const FactorSetd F = swampy_factors({n, n, n}, 3, 0.0, seed);
      for (int m = 0; m < 3; ++m)
        for (double c : column_cosines(F.factor(m))) {
          sum += c;
          sum_abs += std::abs(c);
          ++count;
        }
    }
    const double d = double(n - 1);
    const double expected_abs = std::exp(std::lgamma(d / 2) - std::lgamma((d + 1) / 2)) / std::sqrt(M_PI);
    MESSAGE("n = " << n << ": mean cos " << sum / count << ", mean |cos| " << sum_abs / count << " (sphere value "
                   << expected_abs << ")");
    CHECK(std::abs(sum / count) < 0.3);
    CHECK(sum_abs / count == doctest::Approx(expected_abs).epsilon(0.1));
  }
}

TEST_CASE("swampy generator hits the requested collinearity") {
  for (double c : {0.5, 0.95}) {
    double sum = 0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const FactorSetd F = swampy_factors({8, 8, 8}, 3, c, seed);
      for (int m = 0; m < 3; ++m) {
        CHECK(F.factor(m).colwise().norm().minCoeff() == doctest::Approx(1).epsilon(1e-12));
        for (double x : column_cosines(F.factor(m))) {
          sum += x;
          ++count;
        }
      }
    }
    MESSAGE("c = " << c << ": mean cos " << sum / count);
    CHECK(sum / count == doctest::Approx(c).epsilon(0.15));
  }
}

TEST_CASE("symmetric generator is exactly symmetric") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::symmetric;
  spec.dims = {5, 5, 5};
  spec.seed = 3;
  const Tensor3d T = generate(spec).tensor;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j)
      for (Index k = 0; k < 5; ++k) {
        CHECK(T(i, j, k) == T(j, k, i));
        CHECK(T(i, j, k) == T(k, i, j));
        CHECK(T(i, j, k) == T(j, i, k));
      }
  spec.dims = {5, 4, 5};
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("noisy generator scales noise to the tensor") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::noisy;
  spec.dims = {8, 8, 8};
  spec.noise = 0.1;
  spec.seed = 5;
  const GeneratedProblem p = generate(spec);
  const Tensor3d clean = reconstruct(p.truth);
  const double rel = std::sqrt(frobenius_sq(Tensor3d(p.tensor - clean)) / frobenius_sq(clean));
  MESSAGE("relative noise " << rel);
  CHECK(rel == doctest::Approx(0.1).epsilon(0.1));

  spec.noise = -1;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("generators are seeded") {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::swampy;
  spec.collinearity = 0.9;
  spec.seed = 8;
  CHECK(generate(spec).tensor.data() == generate(spec).tensor.data());
  GeneratorSpec other = spec;
  other.seed = 9;
  CHECK(generate(spec).tensor.data() != generate(other).tensor.data());
  spec.collinearity = 1.0;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
  CHECK_THROWS_AS(parse_generator_kind("cubic"), std::invalid_argument);
}

TEST_CASE("bounds report") {
  const BoundsReport diag = compute_bounds(diagonal_222(), 1);
  CHECK(std::abs(diag.lower_bound) < 1e-10);
  CHECK(std::abs(diag.upper_bound - 0.75) < 1e-10);
  CHECK(std::abs(diag.gap_bound - 0.75) < 1e-10);

  GeneratorSpec spec;
  spec.dims = {4, 5, 6};
  spec.rank = 3;
  spec.seed = 1;
  const BoundsReport exact = compute_bounds(generate(spec).tensor, 3);
  CHECK(exact.lower_bound < 1e-10);

  const BoundsReport full = compute_bounds(rand_tensor(3, 2, 3, 4), 2);
  CHECK(full.lower_bound == 0);

  const fs::path dir = scratch_dir("bounds");
  io::write_tensor(dir / "t.txt", diagonal_222());
  const fs::path out = cmd_bounds(dir / "t.txt", 1, dir);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j.at("upper_bound").get<double>() == doctest::Approx(0.75));
  CHECK(j.at("per_mode").size() == 3);
  CHECK_THROWS_AS(compute_bounds(Tensor3d(2, 2, 2), 1), DataError);
  CHECK_THROWS_AS(compute_bounds(diagonal_222(), 0), std::invalid_argument);
}

TEST_CASE("quantile and iterations_to") {
  CHECK(quantile({3, 1, 2}, 0.5) == 2);
  CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(std::isinf(quantile({1, inf, inf}, 0.5)));
  CHECK(quantile({1, 2, inf}, 0.5) == 2);
}

TEST_CASE("bench summary") {
  ExperimentSpec spec;
  spec.generator.dims = {3, 3, 3};
  spec.generator.rank = 1;
  SolverConfig cfg;
  cfg.rank = 1;
  cfg.max_iters = 200;
  spec.configs = {cfg};
  spec.repetitions = 3;
  spec.seed = 12;
  const BenchSummary a = cmd_bench(spec);
  REQUIRE(a.rows.size() == 1);
  CHECK(a.rows[0].iterations.size() == 3);
  const BenchSummary b = cmd_bench(spec);
  CHECK(a.rows[0].iterations == b.rows[0].iterations);
  CHECK(a.rows[0].finals == b.rows[0].finals);

  spec.threads = 2;
  const BenchSummary c = cmd_bench(spec);
  CHECK(a.rows[0].finals == c.rows[0].finals);

  std::ostringstream csv;
  write_bench_csv(csv, a);
  CHECK(csv.str().rfind("method,init,repetitions", 0) == 0);

  spec.repetitions = 0;
  CHECK_THROWS_AS(cmd_bench(spec), std::invalid_argument);
}
