// Alternating CP solvers: plain ALS, proximally regularized ALS (RALS), and
// ALS followed by a line search along the sweep direction (LSALS), each with
// random, centroid, or symmetric-centroid initial factors.
#pragma once

#include "cpcp/centroid.hpp"
#include "cpcp/reduced.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace cpcp {

enum class Method { als, rals, lsals };
enum class InitKind { random, centroid, centroid_symmetric };
enum class Status { converged, stalled, max_iters };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::als: return "als";
    case Method::rals: return "rals";
    case Method::lsals: return "lsals";
  }
  return "?";
}
inline const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::random: return "random";
    case InitKind::centroid: return "centroid";
    case InitKind::centroid_symmetric: return "centroid_symmetric";
  }
  return "?";
}
inline const char* to_string(Status s) {
  switch (s) {
    case Status::converged: return "converged";
    case Status::stalled: return "stalled";
    case Status::max_iters: return "max_iters";
  }
  return "?";
}

/// Consecutive low-progress iterations after which a run counts as stalled.
inline constexpr int kStallWindow = 5;

/// Extrapolation steps tried by the LSALS line search, in order of preference.
inline constexpr std::array<double, 5> kLineSearchSteps{1.0, 1.5, 2.0, 3.0, 5.0};

struct SolverConfig {
  Method method = Method::als;
  InitKind init = InitKind::random;
  std::uint64_t seed = 0;
  Index rank = 1;
  int max_iters = 1000;
  double tol_residual = 1e-10;
  double tol_stall = 1e-12;
  double rals_alpha0 = 1.0;
  double rals_decay = 0.7;
  double rals_alpha_floor = 1e-12;
  int ls_interval = 1;
  bool symmetric = false;

  void validate() const {
    if (rank < 1) throw std::invalid_argument("config: rank must be at least 1");
    if (max_iters < 1) throw std::invalid_argument("config: max_iters must be at least 1");
    if (!(tol_residual > 0) || !(tol_stall > 0)) throw std::invalid_argument("config: tolerances must be positive");
    if (!(rals_decay > 0 && rals_decay < 1)) throw std::invalid_argument("config: rals_decay must lie in (0,1)");
    if (!(rals_alpha0 >= 0) || !(rals_alpha_floor >= 0)) throw std::invalid_argument("config: alphas must be nonnegative");
    if (ls_interval < 1) throw std::invalid_argument("config: ls_interval must be at least 1");
  }
};

/// alpha_k = max(alpha0 * decay^k, floor)
inline double rals_schedule(int k, const SolverConfig& cfg) {
  if (k < 0) throw std::invalid_argument("rals_schedule: iteration must be nonnegative");
  return std::max(cfg.rals_alpha0 * std::pow(cfg.rals_decay, k), cfg.rals_alpha_floor);
}

struct TraceFlags {
  bool degenerate = false;    // a Gram solve dropped directions or sigma_min(KR) < 1e-12 sigma_max
  bool stall = false;         // relative decrease below tol_stall
  bool extrapolated = false;  // line search picked a step > 1
};

template <typename Scalar>
struct TraceRecord {
  int iter = 0;  // 1-based sweep count
  Scalar objective = 0;
  Scalar jred = 0;  // J_red(B, C) of the iterate entering this sweep
  std::array<Scalar, 3> sigma_min{};  // of B kr C, C kr A, A kr B after the sweep
  std::array<Index, 3> kr_rank{};
  double wall_ms = 0;  // since the start of the run
  double alpha = 0;    // RALS weight used
  double step = 1;     // LSALS step taken
  TraceFlags flags;
};

template <typename Scalar>
struct ConvergenceTrace {
  std::vector<TraceRecord<Scalar>> records;

  std::size_t size() const { return records.size(); }
  const TraceRecord<Scalar>& back() const { return records.back(); }
};

/// One sweep plus the values seen along the way.
template <typename Scalar>
struct SweepResult {
  FactorSet<Scalar> factors;
  std::array<Scalar, 3> half_objectives{};  // objective after each factor update
  bool degenerate = false;
  double step = 1;
};

namespace detail {

/// Least-squares (alpha = 0) or proximal update of factor `mode` with the
/// other two held fixed.
template <typename Scalar>
Mat<Scalar> update_factor(const Tensor3<Scalar>& T, const FactorSet<Scalar>& F, int mode, Scalar alpha, bool& degenerate) {
  const Mat<Scalar>& X = F.factor((mode + 1) % 3);
  const Mat<Scalar>& Y = F.factor((mode + 2) % 3);
  const Mat<Scalar> G = (X.transpose() * X).cwiseProduct(Y.transpose() * Y);
  const Mat<Scalar> rhs = mttkrp(T, mode, F);
  const Index R = G.rows();
  if (alpha == Scalar(0)) {
    Index kept = 0;
    const Mat<Scalar> pinv = pinv_gram(G, &kept);
    if (kept < R) degenerate = true;
    return rhs * pinv;
  }
  const Mat<Scalar> damped = G + alpha * Mat<Scalar>::Identity(R, R);
  const Mat<Scalar> shifted = rhs + alpha * F.factor(mode);
  return damped.ldlt().solve(shifted.transpose()).transpose();
}

template <typename Scalar>
SweepResult<Scalar> sweep(const Tensor3<Scalar>& T, const FactorSet<Scalar>& F, Scalar alpha, bool symmetric,
                          bool track_half_steps) {
  F.validate(T.dims());
  if (symmetric && T.J() != T.K()) throw DimensionError("symmetric sweep: requires J == K");
  SweepResult<Scalar> out;
  out.factors = F;
  FactorSet<Scalar>& G = out.factors;
  G.A = update_factor(T, G, 0, alpha, out.degenerate);
  if (track_half_steps) out.half_objectives[0] = objective(T, G);
  if (symmetric) {
    // B and C move together: one least-squares solve for the shared factor.
    G.B = update_factor(T, G, 1, alpha, out.degenerate);
    G.C = G.B;
    if (track_half_steps) out.half_objectives[1] = out.half_objectives[2] = objective(T, G);
    return out;
  }
  G.B = update_factor(T, G, 1, alpha, out.degenerate);
  if (track_half_steps) out.half_objectives[1] = objective(T, G);
  G.C = update_factor(T, G, 2, alpha, out.degenerate);
  if (track_half_steps) out.half_objectives[2] = objective(T, G);
  return out;
}

template <typename Scalar>
FactorSet<Scalar> extrapolate(const FactorSet<Scalar>& from, const FactorSet<Scalar>& to, Scalar s) {
  return {from.A + s * (to.A - from.A), from.B + s * (to.B - from.B), from.C + s * (to.C - from.C)};
}

}  // namespace detail

/// One ALS sweep: A, then B, then C, each the exact least-squares update.
template <typename Scalar>
FactorSet<Scalar> als_sweep(const Tensor3<Scalar>& T, const FactorSet<Scalar>& F) {
  return detail::sweep(T, F, Scalar(0), false, false).factors;
}

/// One RALS sweep with proximal weight alpha on each subproblem.
template <typename Scalar>
FactorSet<Scalar> rals_sweep(const Tensor3<Scalar>& T, const FactorSet<Scalar>& F, Scalar alpha) {
  if (!(alpha >= Scalar(0))) throw std::invalid_argument("rals_sweep: alpha must be nonnegative");
  return detail::sweep(T, F, alpha, false, false).factors;
}

/// ALS sweep from F, then the best of F + s (F_als - F) over the fixed step
/// set. s = 1 returns the ALS iterate itself, so the result is never worse
/// than a plain sweep.
template <typename Scalar>
SweepResult<Scalar> lsals_sweep(const Tensor3<Scalar>& T, const FactorSet<Scalar>& F, bool symmetric = false) {
  SweepResult<Scalar> plain = detail::sweep(T, F, Scalar(0), symmetric, true);
  SweepResult<Scalar> out = plain;
  Scalar best = plain.half_objectives[2];
  for (std::size_t s = 1; s < kLineSearchSteps.size(); ++s) {
    FactorSet<Scalar> cand = detail::extrapolate(F, plain.factors, Scalar(kLineSearchSteps[s]));
    const Scalar value = objective(T, cand);
    if (value < best) {
      best = value;
      out.factors = std::move(cand);
      out.step = kLineSearchSteps[s];
    }
  }
  out.half_objectives[2] = best;
  return out;
}

/// Seeded standard normal factors with unit-norm columns.
template <typename Scalar>
FactorSet<Scalar> random_factors(const Dims3& dims, Index R, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FactorSet<Scalar> F;
  for (int m = 0; m < 3; ++m) {
    Mat<Scalar>& X = F.factor(m);
    X.resize(dims[m], R);
    for (Index c = 0; c < R; ++c) {
      for (Index r = 0; r < dims[m]; ++r) X(r, c) = Scalar(normal(rng));
      X.col(c).normalize();
    }
  }
  return F;
}

template <typename Scalar>
struct Decomposition {
  FactorSet<Scalar> factors;
  ConvergenceTrace<Scalar> trace;
  Status status = Status::max_iters;
  Scalar initial_objective = 0;
  int init_mode = -1;           // eliminated mode chosen by centroid init
  Scalar symmetry_defect = 0;   // reported by symmetric centroid init
  std::vector<FactorSet<Scalar>> history;  // iterate 0..n when requested
};

struct DecomposeOptions {
  bool keep_history = false;
  bool record_kr_spectrum = true;
};

template <typename Scalar>
FactorSet<Scalar> initial_factors(const Tensor3<Scalar>& T, const SolverConfig& cfg, Decomposition<Scalar>* info = nullptr) {
  FactorSet<Scalar> F;
  switch (cfg.init) {
    case InitKind::random:
      F = random_factors<Scalar>(T.dims(), cfg.rank, cfg.seed);
      break;
    case InitKind::centroid: {
      CentroidBundle<Scalar> b = centroid_init(T, cfg.rank);
      if (info) info->init_mode = b.mode_assignment;
      F = std::move(b.init_factors);
      break;
    }
    case InitKind::centroid_symmetric: {
      SymmetricInit<Scalar> s = centroid_init_symmetric(T, cfg.rank);
      if (info) {
        info->init_mode = 0;
        info->symmetry_defect = s.symmetry_defect;
      }
      F = std::move(s.factors);
      break;
    }
  }
  if (cfg.symmetric) {
    if (T.J() != T.K()) throw DimensionError("symmetric solve: requires J == K");
    F.C = F.B;
  }
  return F;
}

/// Initialize per cfg.init and iterate the selected sweep until the objective
/// drops below tol_residual, progress stalls for kStallWindow sweeps, or
/// max_iters sweeps have run.
template <typename Scalar>
Decomposition<Scalar> decompose(const Tensor3<Scalar>& T, const SolverConfig& cfg, const DecomposeOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  const auto start = clock::now();
  Decomposition<Scalar> out;
  FactorSet<Scalar> F = initial_factors(T, cfg, &out);
  F.validate(T.dims());
  out.initial_objective = objective(T, F);
  if (opts.keep_history) out.history.push_back(F);

  Scalar prev_objective = out.initial_objective;
  int stall_count = 0;
  for (int k = 0; k < cfg.max_iters; ++k) {
    TraceRecord<Scalar> rec;
    rec.iter = k + 1;
    SweepResult<Scalar> step;
    switch (cfg.method) {
      case Method::als:
        step = detail::sweep(T, F, Scalar(0), cfg.symmetric, true);
        rec.jred = step.half_objectives[0];
        break;
      case Method::rals: {
        rec.alpha = rals_schedule(k, cfg);
        step = detail::sweep(T, F, Scalar(rec.alpha), cfg.symmetric, false);
        rec.jred = jred_direct(T, F.B, F.C);
        break;
      }
      case Method::lsals:
        if ((k + 1) % cfg.ls_interval == 0) {
          step = lsals_sweep(T, F, cfg.symmetric);
        } else {
          step = detail::sweep(T, F, Scalar(0), cfg.symmetric, true);
        }
        rec.jred = step.half_objectives[0];
        break;
    }
    F = std::move(step.factors);
    rec.objective = objective(T, F);
    rec.step = step.step;
    rec.flags.extrapolated = step.step > 1.0;
    rec.flags.degenerate = step.degenerate;
    if (opts.record_kr_spectrum) {
      for (int m = 0; m < 3; ++m) {
        const KrRankInfo<Scalar> info = kr_rank_info(F.factor((m + 1) % 3), F.factor((m + 2) % 3));
        rec.sigma_min[static_cast<std::size_t>(m)] = info.sigma_min;
        rec.kr_rank[static_cast<std::size_t>(m)] = info.rank;
        if (info.degenerate()) rec.flags.degenerate = true;
      }
    }
    const Scalar decrease = prev_objective > Scalar(0) ? (prev_objective - rec.objective) / prev_objective : Scalar(0);
    rec.flags.stall = decrease < Scalar(cfg.tol_stall);
    stall_count = rec.flags.stall ? stall_count + 1 : 0;
    rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    out.trace.records.push_back(rec);
    if (opts.keep_history) out.history.push_back(F);
    prev_objective = rec.objective;

    if (rec.objective < Scalar(cfg.tol_residual)) {
      out.status = Status::converged;
      break;
    }
    if (stall_count >= kStallWindow) {
      out.status = Status::stalled;
      break;
    }
  }
  out.factors = std::move(F);
  return out;
}

}  // namespace cpcp
