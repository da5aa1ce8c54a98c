#include "cpcp/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

namespace cpcp {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code(Status s) {
  switch (s) {
    case Status::converged: return exit_codes::ok;
    case Status::stalled: return exit_codes::stalled;
    case Status::max_iters: return exit_codes::max_iters;
  }
  return exit_codes::data;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

GenerateOutput cmd_generate(const GeneratorSpec& spec, const fs::path& out_dir) {
  const GeneratedProblem p = generate(spec);
  ensure_dir(out_dir);
  GenerateOutput out{out_dir / "tensor.txt", out_dir / "factors_true.txt"};
  io::write_tensor(out.tensor_file, p.tensor);
  io::write_factors(out.factor_file, p.truth);
  return out;
}

BoundsReport compute_bounds(const Tensor3d& T, Index R) {
  if (R < 1) throw std::invalid_argument("bounds: rank must be at least 1");
  if (frobenius_sq(T) == 0.0) throw DataError("bounds: zero tensor");
  BoundsReport rep;
  rep.rank = R;
  rep.frobenius_sq = frobenius_sq(T);
  for (int mode = 0; mode < 3; ++mode) {
    const Tensor3d view = rotate_modes(T, mode);
    const ContractionKernel<double> kern = build_kernel(view);
    ModeBounds& mb = rep.per_mode[static_cast<std::size_t>(mode)];
    mb.mode = mode;
    mb.lower_bound = lower_bound(kern, R);
    mb.upper_bound = upper_bound(kern, R);
    mb.gap_bound = gap_bound(kern, R);
    mb.centroid_norm = centroid(kern).norm();
    mb.lambda_sum = lambda_sum(kern);
  }
  const ModeBounds& m0 = rep.per_mode[0];
  rep.lower_bound = m0.lower_bound;
  rep.upper_bound = m0.upper_bound;
  rep.gap_bound = m0.gap_bound;
  rep.centroid_norm = m0.centroid_norm;
  rep.lambda_sum = m0.lambda_sum;
  rep.best_lower_bound = m0.lower_bound;
  rep.best_upper_bound = m0.upper_bound;
  for (const ModeBounds& mb : rep.per_mode) {
    rep.best_lower_bound = std::max(rep.best_lower_bound, mb.lower_bound);
    rep.best_upper_bound = std::min(rep.best_upper_bound, mb.upper_bound);
  }
  if (R <= std::max({std::min(T.J(), T.K()), std::min(T.K(), T.I()), std::min(T.I(), T.J())})) {
    const CentroidBundle<double> b = centroid_init(T, R);
    for (const auto& c : b.candidates) {
      ModeBounds& mb = rep.per_mode[static_cast<std::size_t>(c.mode)];
      mb.init_feasible = c.feasible;
      mb.init_objective = c.objective;
    }
    rep.init_mode = b.mode_assignment;
    rep.init_objective = objective(T, b.init_factors);
  }
  return rep;
}

void write_bounds_json(std::ostream& os, const BoundsReport& r) {
  json j;
  j["rank"] = r.rank;
  j["lower_bound"] = r.lower_bound;
  j["upper_bound"] = r.upper_bound;
  j["gap_bound"] = r.gap_bound;
  j["centroid_norm"] = r.centroid_norm;
  j["lambda_sum"] = r.lambda_sum;
  j["frobenius_sq"] = r.frobenius_sq;
  j["best_lower_bound"] = r.best_lower_bound;
  j["best_upper_bound"] = r.best_upper_bound;
  j["init_mode"] = r.init_mode ? json(*r.init_mode) : json(nullptr);
  j["init_objective"] = r.init_objective ? json(*r.init_objective) : json(nullptr);
  json modes = json::array();
  for (const ModeBounds& mb : r.per_mode) {
    modes.push_back({{"mode", mb.mode},
                     {"lower_bound", mb.lower_bound},
                     {"upper_bound", mb.upper_bound},
                     {"gap_bound", mb.gap_bound},
                     {"centroid_norm", mb.centroid_norm},
                     {"lambda_sum", mb.lambda_sum},
                     {"init_feasible", mb.init_feasible},
                     {"init_objective", mb.init_feasible ? json(mb.init_objective) : json(nullptr)}});
  }
  j["per_mode"] = modes;
  os << j.dump(2) << '\n';
}

fs::path cmd_bounds(const fs::path& tensor_file, Index R, const fs::path& out_dir, BoundsReport* report) {
  const Tensor3d T = io::read_tensor(tensor_file);
  const BoundsReport rep = compute_bounds(T, R);
  ensure_dir(out_dir);
  const fs::path out = out_dir / "bounds.json";
  auto os = open_out(out);
  write_bounds_json(os, rep);
  if (report) *report = rep;
  return out;
}

io::History make_history(const Decomposition<double>& d) {
  io::History h;
  h.iterates = d.history;
  h.objectives.reserve(d.history.size());
  for (std::size_t k = 0; k < d.history.size(); ++k)
    h.objectives.push_back(k == 0 ? d.initial_objective : d.trace.records[k - 1].objective);
  return h;
}

Decomposition<double> cmd_decompose(const fs::path& tensor_file, const SolverConfig& cfg, const fs::path& out_dir,
                                    const DecomposeRunOptions& opts, DecomposeFiles* files) {
  const Tensor3d T = io::read_tensor(tensor_file);
  DecomposeOptions dopts;
  dopts.keep_history = opts.keep_history;
  Decomposition<double> d = decompose(T, cfg, dopts);
  ensure_dir(out_dir);
  DecomposeFiles f{out_dir / "factors.txt", out_dir / "trace.jsonl", std::nullopt};
  io::write_factors(f.factor_file, d.factors);
  {
    auto os = open_out(f.trace_file);
    io::write_trace(os, d.trace, opts.record_time);
  }
  if (opts.keep_history) {
    f.history_file = out_dir / "history.jsonl";
    auto os = open_out(*f.history_file);
    io::write_history(os, make_history(d));
  }
  if (files) *files = f;
  return d;
}

SwampReport<double> cmd_diagnose(const fs::path& history_file, const std::optional<fs::path>& reference_factors,
                                 const fs::path& out_dir, const SwampOptions& opts) {
  if (!fs::exists(history_file)) throw DataError("missing history file: " + history_file.string());
  const io::History h = io::read_history(history_file);
  std::optional<FactorSetd> ref;
  if (reference_factors) ref = io::read_factors(*reference_factors);
  const SwampReport<double> report = swamp_report(h.iterates, h.objectives, ref ? &*ref : nullptr, opts);
  ensure_dir(out_dir);
  auto os = open_out(out_dir / "swamp.jsonl");
  io::write_swamp_report(os, report);
  return report;
}

void ExperimentSpec::validate() const {
  if (repetitions < 1) throw std::invalid_argument("bench: repetitions must be at least 1");
  if (configs.empty()) throw std::invalid_argument("bench: no solver configurations");
  if (threads < 1) throw std::invalid_argument("bench: threads must be at least 1");
  if (!(target > 0)) throw std::invalid_argument("bench: target must be positive");
  if (tensor_file && !fs::exists(*tensor_file)) throw DataError("bench: missing tensor file " + tensor_file->string());
  if (!tensor_file) generator.validate();
  for (const auto& c : configs) c.validate();
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = p * double(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  if (std::isinf(values[lo]) || std::isinf(values[hi])) return std::numeric_limits<double>::infinity();
  return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
}

double iterations_to(const Decomposition<double>& d, double target) {
  if (d.initial_objective < target) return 0;
  for (const auto& rec : d.trace.records)
    if (rec.objective < target) return rec.iter;
  return std::numeric_limits<double>::infinity();
}

BenchSummary cmd_bench(const ExperimentSpec& spec) {
  spec.validate();
  std::optional<Tensor3d> fixed;
  if (spec.tensor_file) fixed = io::read_tensor(*spec.tensor_file);
  const fs::path runs_dir = spec.output_dir / "runs";
  const bool write_runs = spec.write_runs && !spec.output_dir.empty();
  if (write_runs) ensure_dir(runs_dir);

  struct Job {
    std::size_t config;
    int rep;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < spec.configs.size(); ++c)
    for (int r = 0; r < spec.repetitions; ++r) jobs.push_back({c, r});
  std::vector<std::pair<double, double>> results(jobs.size());

  auto run = [&](std::size_t n) {
    const Job& job = jobs[n];
    const std::uint64_t seed = spec.seed + static_cast<std::uint64_t>(job.rep);
    Tensor3d T;
    if (fixed) {
      T = *fixed;
    } else {
      GeneratorSpec g = spec.generator;
      g.seed = seed;
      T = generate(g).tensor;
    }
    SolverConfig cfg = spec.configs[job.config];
    cfg.seed = seed;
    const Decomposition<double> d = decompose(T, cfg);
    results[n] = {iterations_to(d, spec.target), d.trace.records.empty() ? d.initial_objective : d.trace.back().objective};
    if (write_runs) {
      char name[96];
      std::snprintf(name, sizeof name, "%zu_%s_%s_%03d.jsonl", job.config, to_string(cfg.method), to_string(cfg.init), job.rep);
      auto os = open_out(runs_dir / name);
      io::write_trace(os, d.trace, false);
    }
  };

  if (spec.threads == 1) {
    for (std::size_t n = 0; n < jobs.size(); ++n) run(n);
  } else {
    std::vector<std::future<void>> pending;
    std::size_t next = 0;
    while (next < jobs.size() || !pending.empty()) {
      while (next < jobs.size() && pending.size() < static_cast<std::size_t>(spec.threads))
        pending.push_back(std::async(std::launch::async, run, next++));
      pending.front().get();
      pending.erase(pending.begin());
    }
  }

  BenchSummary summary;
  for (std::size_t c = 0; c < spec.configs.size(); ++c) {
    BenchRow row;
    row.method = spec.configs[c].method;
    row.init = spec.configs[c].init;
    row.repetitions = spec.repetitions;
    for (std::size_t n = 0; n < jobs.size(); ++n) {
      if (jobs[n].config != c) continue;
      row.iterations.push_back(results[n].first);
      row.finals.push_back(results[n].second);
      if (std::isfinite(results[n].first)) ++row.reached;
    }
    row.iters_median = quantile(row.iterations, 0.5);
    row.iters_q1 = quantile(row.iterations, 0.25);
    row.iters_q3 = quantile(row.iterations, 0.75);
    row.final_median = quantile(row.finals, 0.5);
    row.final_q1 = quantile(row.finals, 0.25);
    row.final_q3 = quantile(row.finals, 0.75);
    summary.rows.push_back(std::move(row));
  }
  if (!spec.output_dir.empty()) {
    ensure_dir(spec.output_dir);
    auto os = open_out(spec.output_dir / "bench.csv");
    write_bench_csv(os, summary);
  }
  return summary;
}

void write_bench_csv(std::ostream& os, const BenchSummary& summary) {
  auto num = [](double x) { return std::isinf(x) ? std::string("inf") : io::format_double(x); };
  os << "method,init,repetitions,reached,iters_median,iters_q1,iters_q3,final_median,final_q1,final_q3\n";
  for (const BenchRow& r : summary.rows) {
    os << to_string(r.method) << ',' << to_string(r.init) << ',' << r.repetitions << ',' << r.reached << ','
       << num(r.iters_median) << ',' << num(r.iters_q1) << ',' << num(r.iters_q3) << ',' << num(r.final_median) << ','
       << num(r.final_q1) << ',' << num(r.final_q3) << '\n';
  }
}

}  // namespace cpcp
