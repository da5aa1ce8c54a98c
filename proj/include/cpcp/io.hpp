// Text file formats.
//
//   tensor   "tensor3 I J K" then I*J*K values, i fastest, then j, then k.
//   factors  "factors I J K R" then A (I rows), blank line, B, blank line, C;
//            each row holds R values.
//   trace    one JSON object per line and sweep:
//            {"iter", "objective", "jred", "sigma_min": [3], "kr_rank": [3],
//             "wall_ms", "alpha", "step", "flags": {...}}
//   history  one JSON object per line and iterate (iterate 0 is the start):
//            {"iter", "objective", "A": [[...]], "B": ..., "C": ...}
//   config   key=value lines with the SolverConfig field names; '#' starts a
//            comment.
//
// Numbers in tensor and factor files carry 17 significant digits so a
// write/read cycle is exact.
#pragma once

#include "cpcp/diagnostics.hpp"
#include "cpcp/solvers.hpp"
#include "cpcp/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace cpcp::io {

void write_tensor(std::ostream& os, const Tensor3d& T);
Tensor3d read_tensor(std::istream& is);
void write_tensor(const std::filesystem::path& path, const Tensor3d& T);
Tensor3d read_tensor(const std::filesystem::path& path);

void write_factors(std::ostream& os, const FactorSetd& F);
FactorSetd read_factors(std::istream& is);
void write_factors(const std::filesystem::path& path, const FactorSetd& F);
FactorSetd read_factors(const std::filesystem::path& path);

/// wall_ms is written as 0 unless `include_time`.
void write_trace(std::ostream& os, const ConvergenceTrace<double>& trace, bool include_time);
ConvergenceTrace<double> read_trace(std::istream& is);

struct History {
  std::vector<FactorSetd> iterates;
  std::vector<double> objectives;
};

void write_history(std::ostream& os, const History& history);
History read_history(std::istream& is);
History read_history(const std::filesystem::path& path);

/// Non-finite condition numbers are written as null.
void write_swamp_report(std::ostream& os, const SwampReport<double>& report);

/// Parses key=value lines into a map; throws std::invalid_argument on
/// malformed lines or unknown keys.
std::map<std::string, std::string> read_key_values(std::istream& is);

/// Applies key=value settings on top of `cfg`.
void apply_config(SolverConfig& cfg, const std::map<std::string, std::string>& kv);
SolverConfig read_config(const std::filesystem::path& path, SolverConfig base = {});

Method parse_method(const std::string& s);
InitKind parse_init(const std::string& s);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

}  // namespace cpcp::io
