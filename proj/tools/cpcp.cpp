// cpcp: generate | bounds | decompose | diagnose | bench
#include "cpcp/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace cpcp;

namespace {

struct SolverFlags {
  std::string config_file;
  std::string method, init;
  Index rank = 1;
  int max_iters = 0;
  double tol_residual = 0, tol_stall = 0;
  double rals_alpha0 = 0, rals_decay = 0, rals_alpha_floor = 0;
  int ls_interval = 0;
  bool symmetric = false;

  CLI::Option* o_method = nullptr;
  CLI::Option* o_init = nullptr;
  CLI::Option* o_rank = nullptr;
  CLI::Option* o_max_iters = nullptr;
  CLI::Option* o_tol_residual = nullptr;
  CLI::Option* o_tol_stall = nullptr;
  CLI::Option* o_alpha0 = nullptr;
  CLI::Option* o_decay = nullptr;
  CLI::Option* o_floor = nullptr;
  CLI::Option* o_ls = nullptr;
  CLI::Option* o_sym = nullptr;

  void attach(CLI::App* sub, bool with_method) {
    sub->add_option("--config", config_file, "key=value file with SolverConfig fields")->check(CLI::ExistingFile);
    if (with_method) {
      o_method = sub->add_option("--method", method, "als | rals | lsals");
      o_init = sub->add_option("--init", init, "random | centroid | centroid_symmetric");
    }
    o_rank = sub->add_option("--rank,-r", rank, "CP rank");
    o_max_iters = sub->add_option("--max-iters", max_iters);
    o_tol_residual = sub->add_option("--tol-residual", tol_residual);
    o_tol_stall = sub->add_option("--tol-stall", tol_stall);
    o_alpha0 = sub->add_option("--rals-alpha0", rals_alpha0);
    o_decay = sub->add_option("--rals-decay", rals_decay);
    o_floor = sub->add_option("--rals-alpha-floor", rals_alpha_floor);
    o_ls = sub->add_option("--ls-interval", ls_interval);
    o_sym = sub->add_flag("--symmetric", symmetric, "tie C to B");
  }

  // defaults < config file < flags
  SolverConfig resolve(std::uint64_t seed, bool seed_given) const {
    SolverConfig cfg;
    if (!config_file.empty()) cfg = io::read_config(config_file);
    if (o_method && o_method->count()) cfg.method = io::parse_method(method);
    if (o_init && o_init->count()) cfg.init = io::parse_init(init);
    if (o_rank->count()) cfg.rank = rank;
    if (o_max_iters->count()) cfg.max_iters = max_iters;
    if (o_tol_residual->count()) cfg.tol_residual = tol_residual;
    if (o_tol_stall->count()) cfg.tol_stall = tol_stall;
    if (o_alpha0->count()) cfg.rals_alpha0 = rals_alpha0;
    if (o_decay->count()) cfg.rals_decay = rals_decay;
    if (o_floor->count()) cfg.rals_alpha_floor = rals_alpha_floor;
    if (o_ls->count()) cfg.ls_interval = ls_interval;
    if (o_sym->count()) cfg.symmetric = symmetric;
    if (seed_given) cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto comma = item.find(',', start);
      const auto piece = item.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) out.push_back(piece);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Centroid-initialized CP decomposition of third-order tensors"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string output_dir = ".";
  bool keep_history = false;
  auto* o_seed = app.add_option("--seed", seed, "seed for generators and random starts");
  app.add_option("--output-dir,-o", output_dir, "directory for output files");
  app.add_flag("--keep-history", keep_history, "decompose: write every iterate to history.jsonl");

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic tensor and its factors");
  std::string kind = "random_factors";
  std::vector<Index> dims{4, 4, 4};
  Index gen_rank = 2;
  double collinearity = 0, noise = 0;
  gen->add_option("--kind", kind, "random_factors | swampy | symmetric | diagonal | noisy");
  gen->add_option("--dims", dims, "I J K")->expected(3);
  gen->add_option("--rank,-r", gen_rank);
  gen->add_option("--collinearity", collinearity, "swampy column cosine, in [0,1)");
  gen->add_option("--noise", noise, "noisy: relative noise level");

  // bounds
  auto* bnd = app.add_subcommand("bounds", "lower/upper bounds on the best rank-R error");
  std::string bnd_tensor;
  Index bnd_rank = 1;
  bnd->add_option("--tensor,-t", bnd_tensor)->required()->check(CLI::ExistingFile);
  bnd->add_option("--rank,-r", bnd_rank);

  // decompose
  auto* dec = app.add_subcommand("decompose", "run a CP solver");
  std::string dec_tensor;
  bool record_time = false;
  SolverFlags dec_flags;
  dec->add_option("--tensor,-t", dec_tensor)->required()->check(CLI::ExistingFile);
  dec->add_flag("--record-time", record_time, "write measured wall_ms instead of 0");
  dec_flags.attach(dec, true);

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "swamp metrics over a stored history");
  std::string history_file, reference_file;
  int probes = 1;
  diag->add_option("--history", history_file)->required();
  diag->add_option("--reference", reference_file, "factor file to compare each iterate against")->check(CLI::ExistingFile);
  diag->add_option("--probes", probes, "probe vectors averaged per distance");

  // bench
  auto* bench = app.add_subcommand("bench", "iterations-to-target over methods, inits and repetitions");
  std::string bench_tensor;
  std::vector<std::string> methods{"als"}, inits{"random"};
  int repetitions = 1, threads = 1;
  double target = 1e-6;
  std::string bench_kind = "random_factors";
  std::vector<Index> bench_dims{4, 4, 4};
  double bench_coll = 0, bench_noise = 0;
  SolverFlags bench_flags;
  bench->add_option("--tensor,-t", bench_tensor, "fixed tensor; otherwise one generated tensor per repetition")
      ->check(CLI::ExistingFile);
  bench->add_option("--methods", methods, "comma-separated")->delimiter(',');
  bench->add_option("--inits", inits, "comma-separated")->delimiter(',');
  bench->add_option("--repetitions", repetitions);
  bench->add_option("--threads", threads);
  bench->add_option("--target", target);
  bench->add_option("--kind", bench_kind);
  bench->add_option("--dims", bench_dims)->expected(3);
  bench->add_option("--collinearity", bench_coll);
  bench->add_option("--noise", bench_noise);
  bench_flags.attach(bench, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? exit_codes::ok : exit_codes::usage;
  }

  const bool seed_given = o_seed->count() > 0;
  const fs::path out = output_dir;
  try {
    if (*gen) {
      GeneratorSpec spec;
      spec.kind = parse_generator_kind(kind);
      spec.dims = {dims[0], dims[1], dims[2]};
      spec.rank = gen_rank;
      spec.seed = seed;
      spec.collinearity = collinearity;
      spec.noise = noise;
      const GenerateOutput g = cmd_generate(spec, out);
      std::cout << g.tensor_file.string() << '\n' << g.factor_file.string() << '\n';
      return exit_codes::ok;
    }
    if (*bnd) {
      BoundsReport rep;
      cmd_bounds(bnd_tensor, bnd_rank, out, &rep);
      write_bounds_json(std::cout, rep);
      return exit_codes::ok;
    }
    if (*dec) {
      const SolverConfig cfg = dec_flags.resolve(seed, seed_given);
      DecomposeRunOptions opts;
      opts.keep_history = keep_history;
      opts.record_time = record_time;
      const Decomposition<double> d = cmd_decompose(dec_tensor, cfg, out, opts);
      const double final_obj = d.trace.records.empty() ? d.initial_objective : d.trace.back().objective;
      std::cout << "status " << to_string(d.status) << "\niterations " << d.trace.size() << "\nobjective "
                << io::format_double(final_obj) << '\n';
      return exit_code(d.status);
    }
    if (*diag) {
      SwampOptions opts;
      if (seed_given) opts.probe_seed = seed;
      opts.probes = probes;
      std::optional<fs::path> ref;
      if (!reference_file.empty()) ref = reference_file;
      const SwampReport<double> rep = cmd_diagnose(history_file, ref, out, opts);
      std::cout << "rows " << rep.rows.size() << '\n';
      return exit_codes::ok;
    }
    if (*bench) {
      ExperimentSpec spec;
      if (!bench_tensor.empty()) spec.tensor_file = bench_tensor;
      spec.generator.kind = parse_generator_kind(bench_kind);
      spec.generator.dims = {bench_dims[0], bench_dims[1], bench_dims[2]};
      spec.generator.collinearity = bench_coll;
      spec.generator.noise = bench_noise;
      const SolverConfig base = bench_flags.resolve(seed, seed_given);
      spec.generator.rank = base.rank;
      for (const auto& m : split_list(methods))
        for (const auto& i : split_list(inits)) {
          SolverConfig cfg = base;
          cfg.method = io::parse_method(m);
          cfg.init = io::parse_init(i);
          spec.configs.push_back(cfg);
        }
      spec.output_dir = out;
      spec.seed = seed;
      spec.repetitions = repetitions;
      spec.threads = threads;
      spec.target = target;
      const BenchSummary summary = cmd_bench(spec);
      write_bench_csv(std::cout, summary);
      return exit_codes::ok;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "cpcp: " << e.what() << '\n';
    return exit_codes::usage;
  } catch (const std::exception& e) {
    std::cerr << "cpcp: " << e.what() << '\n';
    return exit_codes::data;
  }
  return exit_codes::usage;
}
