// Command implementations behind the cpcp executable. Each command reads and
// writes files only through the formats in io.hpp.
#pragma once

#include "cpcp/diagnostics.hpp"
#include "cpcp/generators.hpp"
#include "cpcp/io.hpp"
#include "cpcp/solvers.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cpcp {

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int stalled = 2;
inline constexpr int max_iters = 3;
inline constexpr int usage = 64;
inline constexpr int data = 65;
}  // namespace exit_codes

int exit_code(Status s);

// generate --------------------------------------------------------------------

struct GenerateOutput {
  std::filesystem::path tensor_file;
  std::filesystem::path factor_file;
};

/// Writes tensor.txt and factors_true.txt into `out_dir`.
GenerateOutput cmd_generate(const GeneratorSpec& spec, const std::filesystem::path& out_dir);

// bounds ----------------------------------------------------------------------

struct ModeBounds {
  int mode = 0;  // eliminated factor
  double lower_bound = 0;
  double upper_bound = 0;
  double gap_bound = 0;
  double centroid_norm = 0;
  double lambda_sum = 0;
  bool init_feasible = false;  // R <= min of the two retained dimensions
  double init_objective = 0;   // objective of the centroid initial point, when feasible
};

struct BoundsReport {
  Index rank = 0;
  // Values for eliminating A (mode 0).
  double lower_bound = 0;
  double upper_bound = 0;
  double gap_bound = 0;
  double centroid_norm = 0;
  double lambda_sum = 0;
  double frobenius_sq = 0;
  // Every mode gives a valid bracket; these are the tightest.
  double best_lower_bound = 0;
  double best_upper_bound = 0;
  std::optional<int> init_mode;  // winner of centroid_init
  std::optional<double> init_objective;
  std::array<ModeBounds, 3> per_mode{};
};

BoundsReport compute_bounds(const Tensor3d& T, Index R);
void write_bounds_json(std::ostream& os, const BoundsReport& report);
/// Writes bounds.json into `out_dir`.
std::filesystem::path cmd_bounds(const std::filesystem::path& tensor_file, Index R, const std::filesystem::path& out_dir,
                                 BoundsReport* report = nullptr);

// decompose -------------------------------------------------------------------

struct DecomposeFiles {
  std::filesystem::path factor_file;  // factors.txt
  std::filesystem::path trace_file;   // trace.jsonl
  std::optional<std::filesystem::path> history_file;  // history.jsonl
};

struct DecomposeRunOptions {
  bool keep_history = false;
  bool record_time = false;
};

/// Runs the solver and writes its outputs; the return value carries the
/// solver status for the exit code.
Decomposition<double> cmd_decompose(const std::filesystem::path& tensor_file, const SolverConfig& cfg,
                                    const std::filesystem::path& out_dir, const DecomposeRunOptions& opts = {},
                                    DecomposeFiles* files = nullptr);

io::History make_history(const Decomposition<double>& d);

// diagnose --------------------------------------------------------------------

/// Reads a history file and writes swamp.jsonl into `out_dir`.
SwampReport<double> cmd_diagnose(const std::filesystem::path& history_file,
                                 const std::optional<std::filesystem::path>& reference_factors,
                                 const std::filesystem::path& out_dir, const SwampOptions& opts = {});

// bench -----------------------------------------------------------------------

struct ExperimentSpec {
  std::optional<std::filesystem::path> tensor_file;  // otherwise `generator`, reseeded per repetition
  GeneratorSpec generator;
  std::vector<SolverConfig> configs;  // one summary row each
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  int repetitions = 1;
  double target = 1e-6;
  int threads = 1;
  bool write_runs = true;  // per-run trace files under runs/

  void validate() const;
};

struct BenchRow {
  Method method = Method::als;
  InitKind init = InitKind::random;
  int repetitions = 0;
  int reached = 0;  // runs with objective < target
  // +inf marks a run that never reached the target.
  double iters_median = 0, iters_q1 = 0, iters_q3 = 0;
  double final_median = 0, final_q1 = 0, final_q3 = 0;
  std::vector<double> iterations;  // per repetition
  std::vector<double> finals;
};

struct BenchSummary {
  std::vector<BenchRow> rows;
};

/// Linear-interpolation quantile of `values` (copied and sorted); +inf if
/// either bracketing value is +inf.
double quantile(std::vector<double> values, double p);

/// 1-based sweep at which the objective first dropped below `target`, 0 if
/// the initial point already did, +inf if never.
double iterations_to(const Decomposition<double>& d, double target);

BenchSummary cmd_bench(const ExperimentSpec& spec);
void write_bench_csv(std::ostream& os, const BenchSummary& summary);

}  // namespace cpcp
