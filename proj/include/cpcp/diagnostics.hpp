// Swamp metrics and rank-1 critical-point tools.
//
// During an ALS swamp the Khatri-Rao ranges of consecutive iterates barely
// move while the factors themselves drift. Two metrics expose that: the
// distance between the projections of a fixed probe vector onto consecutive
// ranges, and the condition number of the two Khatri-Rao matrices placed
// side by side.
#pragma once

#include "cpcp/reduced.hpp"
#include "cpcp/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace cpcp {

/// Unit-norm standard normal probe of length n.
template <typename Scalar>
Vec<Scalar> make_probe(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec<Scalar> x(n);
  for (Index i = 0; i < n; ++i) x[i] = Scalar(normal(rng));
  x.normalize();
  return x;
}

/// |P1 x - P2 x| for the orthogonal projectors onto range(M1) and range(M2);
/// x is normalized first.
template <typename Scalar>
Scalar subspace_proj_distance(const Mat<Scalar>& M1, const Mat<Scalar>& M2, const Vec<Scalar>& x) {
  if (M1.rows() != M2.rows() || x.size() != M1.rows()) throw DimensionError("subspace_proj_distance: row mismatch");
  const Scalar nx = x.norm();
  if (!(nx > Scalar(0))) throw std::invalid_argument("subspace_proj_distance: zero probe");
  const Vec<Scalar> u = x / nx;
  const Mat<Scalar> U1 = range_basis(M1);
  const Mat<Scalar> U2 = range_basis(M2);
  return (U1 * (U1.transpose() * u) - U2 * (U2.transpose() * u)).norm();
}

/// Mean distance over `probes` seeded probes (seed, seed+1, ...).
template <typename Scalar>
Scalar subspace_proj_distance(const Mat<Scalar>& M1, const Mat<Scalar>& M2, std::uint64_t seed, int probes = 1) {
  if (probes < 1) throw std::invalid_argument("subspace_proj_distance: need at least one probe");
  Scalar acc = 0;
  for (int p = 0; p < probes; ++p)
    acc += subspace_proj_distance(M1, M2, make_probe<Scalar>(M1.rows(), seed + static_cast<std::uint64_t>(p)));
  return acc / Scalar(probes);
}

/// sigma_max / sigma_min of [M1 M2]; +inf when the concatenation is
/// numerically rank deficient.
template <typename Scalar>
Scalar kr_condition(const Mat<Scalar>& M1, const Mat<Scalar>& M2) {
  if (M1.rows() != M2.rows()) throw DimensionError("kr_condition: row mismatch");
  Mat<Scalar> joined(M1.rows(), M1.cols() + M2.cols());
  joined << M1, M2;
  const SvdResult<Scalar> s = svd(joined);
  const Index p = s.singular_values.size();
  if (p == 0) return std::numeric_limits<Scalar>::infinity();
  const Scalar smax = s.singular_values[0];
  const Scalar smin = s.singular_values[p - 1];
  if (p < joined.cols() || numerical_rank(s.singular_values, joined.rows(), joined.cols()) < joined.cols() ||
      smin < Scalar(1e-300))
    return std::numeric_limits<Scalar>::infinity();
  return smax / smin;
}

// ---------------------------------------------------------------------------
// Rank-1 tools

/// Contractions of T against two vectors, leaving mode `free` (0, 1 or 2).
template <typename Scalar>
Vec<Scalar> contract_pair(const Tensor3<Scalar>& T, int free, const Vec<Scalar>& x, const Vec<Scalar>& y) {
  FactorSet<Scalar> F;
  const Index dims[3] = {T.I(), T.J(), T.K()};
  for (int m = 0; m < 3; ++m) F.factor(m) = Mat<Scalar>::Zero(dims[m], 1);
  F.factor((free + 1) % 3).col(0) = free == 1 ? y : x;
  F.factor((free + 2) % 3).col(0) = free == 1 ? x : y;
  return mttkrp(T, free, F).col(0);
}
// contract_pair(T, 0, b, c) = T(., b, c); (T, 1, a, c) = T(a, ., c); (T, 2, a, b) = T(a, b, .)

/// Largest violation of the rank-1 first-order conditions
///   mu a~ = T(., b, c),  mu b = T(a~, ., c),  mu c = T(a~, b, .)
/// with b, c normalized, mu = |a| and a~ = a / mu.
template <typename Scalar>
Scalar rank1_critical_residual(const Tensor3<Scalar>& T, const Vec<Scalar>& a, const Vec<Scalar>& b, const Vec<Scalar>& c) {
  if (a.size() != T.I() || b.size() != T.J() || c.size() != T.K()) throw DimensionError("rank1_critical_residual: size mismatch");
  const Scalar mu = a.norm();
  if (!(mu > Scalar(0))) throw std::invalid_argument("rank1_critical_residual: zero a");
  const Vec<Scalar> at = a / mu, bn = b.normalized(), cn = c.normalized();
  const Scalar r1 = (mu * at - contract_pair(T, 0, bn, cn)).norm();
  const Scalar r2 = (mu * bn - contract_pair(T, 1, at, cn)).norm();
  const Scalar r3 = (mu * cn - contract_pair(T, 2, at, bn)).norm();
  return std::max({r1, r2, r3});
}

template <typename Scalar>
struct Rank1Point {
  Vec<Scalar> a, b, c;
};

/// a <- T(., b, c) / (|b|^2 |c|^2), then b, then c.
template <typename Scalar>
Rank1Point<Scalar> rank1_als_sweep(const Tensor3<Scalar>& T, const Rank1Point<Scalar>& p) {
  Rank1Point<Scalar> q = p;
  q.a = contract_pair(T, 0, q.b, q.c) / (q.b.squaredNorm() * q.c.squaredNorm());
  q.b = contract_pair(T, 1, q.a, q.c) / (q.a.squaredNorm() * q.c.squaredNorm());
  q.c = contract_pair(T, 2, q.a, q.b) / (q.a.squaredNorm() * q.b.squaredNorm());
  return q;
}

/// Sine of the angle between two nonzero vectors, sign-insensitive.
template <typename Scalar>
Scalar direction_change(const Vec<Scalar>& x, const Vec<Scalar>& y) {
  const Vec<Scalar> u = x.normalized(), v = y.normalized();
  return (u - u.dot(v) * v).norm();
}

/// Runs `sweeps` rank-1 ALS sweeps from (a, b, c) and returns the largest
/// direction change of any factor between consecutive iterates.
template <typename Scalar>
Scalar rank1_stationarity_check(const Tensor3<Scalar>& T, const Vec<Scalar>& a, const Vec<Scalar>& b, const Vec<Scalar>& c,
                                int sweeps) {
  if (sweeps < 1) throw std::invalid_argument("rank1_stationarity_check: need at least one sweep");
  if (a.size() != T.I() || b.size() != T.J() || c.size() != T.K()) throw DimensionError("rank1_stationarity_check: size mismatch");
  Rank1Point<Scalar> p{a, b, c};
  Scalar drift = 0;
  for (int s = 0; s < sweeps; ++s) {
    const Rank1Point<Scalar> q = rank1_als_sweep(T, p);
    if (!(q.a.norm() > Scalar(0)) || !(q.b.norm() > Scalar(0)) || !(q.c.norm() > Scalar(0)))
      throw DataError("rank1_stationarity_check: iterate collapsed to zero");
    using std::max;
    drift = max({drift, direction_change(p.a, q.a), direction_change(p.b, q.b), direction_change(p.c, q.c)});
    p = q;
  }
  return drift;
}

enum class CriticalKind { maximum, minimum, saddle, degenerate };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::degenerate: return "degenerate";
  }
  return "?";
}

template <typename Scalar>
struct Rank1CriticalPoint {
  Scalar theta = 0;  // b = (cos theta, sin theta)
  Scalar phi = 0;    // c = (cos phi, sin phi)
  Vec<Scalar> a, b, c;  // a = T(., b, c)
  Scalar value = 0;     // f(b, c) = (b kr c)^T M (b kr c) = |a|^2
  CriticalKind kind = CriticalKind::degenerate;
};

namespace detail {

/// f(theta, phi) = |T(., b, c)|^2 on the torus of unit vectors in R^2 x R^2,
/// with its gradient and Hessian.
template <typename Scalar>
struct TorusRayleigh {
  const Tensor3<Scalar>& T;

  static Vec<Scalar> unit(Scalar t) {
    using std::cos;
    using std::sin;
    Vec<Scalar> v(2);
    v << cos(t), sin(t);
    return v;
  }
  static Vec<Scalar> unit_d(Scalar t) {
    using std::cos;
    using std::sin;
    Vec<Scalar> v(2);
    v << -sin(t), cos(t);
    return v;
  }

  Scalar value(Scalar th, Scalar ph) const { return contract_pair(T, 0, unit(th), unit(ph)).squaredNorm(); }

  void derivatives(Scalar th, Scalar ph, Vec<Scalar>& grad, Mat<Scalar>& hess) const {
    const Vec<Scalar> b = unit(th), db = unit_d(th), c = unit(ph), dc = unit_d(ph);
    const Vec<Scalar> w = contract_pair(T, 0, b, c);
    const Vec<Scalar> wt = contract_pair(T, 0, db, c);
    const Vec<Scalar> wp = contract_pair(T, 0, b, dc);
    const Vec<Scalar> wtp = contract_pair(T, 0, db, dc);
    // d^2 b / d theta^2 = -b, so w_tt = -w and w_pp = -w.
    grad.resize(2);
    grad << Scalar(2) * wt.dot(w), Scalar(2) * wp.dot(w);
    hess.resize(2, 2);
    hess(0, 0) = Scalar(2) * (wt.squaredNorm() - w.squaredNorm());
    hess(1, 1) = Scalar(2) * (wp.squaredNorm() - w.squaredNorm());
    hess(0, 1) = hess(1, 0) = Scalar(2) * (wtp.dot(w) + wt.dot(wp));
  }
};

template <typename Scalar>
Scalar pi_value() {
  using std::atan;
  return Scalar(4) * atan(Scalar(1));
}

template <typename Scalar>
Scalar wrap_pi(Scalar t) {
  using std::fmod;
  const Scalar pi = pi_value<Scalar>();
  t = fmod(t, pi);
  if (t < Scalar(0)) t += pi;
  return t;
}

}  // namespace detail

/// Newton's method on grad f = 0 from (theta, phi), with steps capped at
/// `max_step`. Returns the classified point, or nothing when Newton fails or
/// the limit is a zero of f (T(., b, c) = 0, so a = 0).
template <typename Scalar>
std::optional<Rank1CriticalPoint<Scalar>> refine_rank1_critical_point(const Tensor3<Scalar>& T, Scalar theta, Scalar phi,
                                                                      Scalar grad_tol, Scalar max_step = Scalar(0.05),
                                                                      int max_newton = 100) {
  if (T.J() != 2 || T.K() != 2) throw DimensionError("refine_rank1_critical_point: requires J = K = 2");
  using std::max;
  const detail::TorusRayleigh<Scalar> f{T};
  const Scalar scale = max(frobenius_sq(T), std::numeric_limits<Scalar>::min());
  Vec<Scalar> grad;
  Mat<Scalar> hess;
  Scalar th = theta, ph = phi;
  bool ok = false;
  for (int it = 0; it < max_newton; ++it) {
    f.derivatives(th, ph, grad, hess);
    if (grad.norm() <= grad_tol * scale) {
      ok = true;
      break;
    }
    const Eigen::FullPivLU<Mat<Scalar>> lu(hess);
    if (!lu.isInvertible()) break;
    Vec<Scalar> delta = lu.solve(grad);
    const Scalar len = delta.norm();
    if (len > max_step) delta *= max_step / len;
    th -= delta[0];
    ph -= delta[1];
  }
  if (!ok) return std::nullopt;

  Rank1CriticalPoint<Scalar> cp;
  cp.theta = detail::wrap_pi(th);
  cp.phi = detail::wrap_pi(ph);
  cp.b = detail::TorusRayleigh<Scalar>::unit(cp.theta);
  cp.c = detail::TorusRayleigh<Scalar>::unit(cp.phi);
  cp.a = contract_pair(T, 0, cp.b, cp.c);
  cp.value = cp.a.squaredNorm();
  if (cp.value <= Scalar(1e-14) * scale) return std::nullopt;
  f.derivatives(cp.theta, cp.phi, grad, hess);
  const Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(hess);
  const Scalar lo = es.eigenvalues()[0], hi = es.eigenvalues()[1];
  const Scalar eps = Scalar(1e-9) * scale;
  if (hi < -eps)
    cp.kind = CriticalKind::maximum;
  else if (lo > eps)
    cp.kind = CriticalKind::minimum;
  else if (lo < -eps && hi > eps)
    cp.kind = CriticalKind::saddle;
  else
    cp.kind = CriticalKind::degenerate;
  return cp;
}

/// All critical points of f(b, c) = |T(., b, c)|^2 over unit b, c in R^2
/// (J = K = 2), one representative per antipodal class. Candidates come from
/// local minima of |grad f|^2 on a `grid` x `grid` lattice over [0, pi)^2 and
/// are refined by refine_rank1_critical_point. Zeros of f are skipped.
template <typename Scalar>
std::vector<Rank1CriticalPoint<Scalar>> find_rank1_critical_points(const Tensor3<Scalar>& T, int grid = 400,
                                                                   Scalar grad_tol = Scalar(1e-12)) {
  if (T.J() != 2 || T.K() != 2) throw DimensionError("find_rank1_critical_points: requires J = K = 2");
  using std::abs;
  using std::min;
  const Scalar pi = detail::pi_value<Scalar>();
  const detail::TorusRayleigh<Scalar> f{T};
  const Scalar h = pi / Scalar(grid);
  Mat<Scalar> g2(grid, grid);
  Vec<Scalar> grad;
  Mat<Scalar> hess;
  for (int p = 0; p < grid; ++p)
    for (int q = 0; q < grid; ++q) {
      f.derivatives(h * p, h * q, grad, hess);
      g2(p, q) = grad.squaredNorm();
    }

  std::vector<Rank1CriticalPoint<Scalar>> found;
  auto same_point = [&](Scalar t1, Scalar p1, Scalar t2, Scalar p2) {
    auto circ = [&](Scalar x, Scalar y) {
      const Scalar d = abs(x - y);
      return min(d, pi - d);
    };
    return circ(t1, t2) < Scalar(1e-6) && circ(p1, p2) < Scalar(1e-6);
  };

  for (int p = 0; p < grid; ++p)
    for (int q = 0; q < grid; ++q) {
      const Scalar v = g2(p, q);
      bool local_min = true;
      for (int dp = -1; dp <= 1 && local_min; ++dp)
        for (int dq = -1; dq <= 1; ++dq) {
          if (dp == 0 && dq == 0) continue;
          const Scalar nb = g2((p + dp + grid) % grid, (q + dq + grid) % grid);
          if (nb < v || (nb == v && (dp < 0 || (dp == 0 && dq < 0)))) {
            local_min = false;
            break;
          }
        }
      if (!local_min) continue;
      auto cp = refine_rank1_critical_point(T, h * p, h * q, grad_tol, h * Scalar(4));
      if (!cp) continue;
      if (std::any_of(found.begin(), found.end(), [&](const auto& o) { return same_point(o.theta, o.phi, cp->theta, cp->phi); }))
        continue;
      found.push_back(std::move(*cp));
    }
  return found;
}

// ---------------------------------------------------------------------------
// Swamp report over a stored iterate history

template <typename Scalar>
struct SwampRow {
  int iter = 0;                         // transition iter-1 -> iter
  std::array<Scalar, 3> subspace_distance{};  // B kr C, C kr A, A kr B
  std::array<Scalar, 3> condition{};          // +inf when singular
  std::optional<std::array<Scalar, 3>> reference_distance;  // A, B, C vs reference
  Scalar objective = 0;
  bool stall = false;
};

template <typename Scalar>
struct SwampReport {
  std::vector<SwampRow<Scalar>> rows;
};

struct SwampOptions {
  std::uint64_t probe_seed = 0x5eed;
  int probes = 1;
  double tol_stall = 1e-12;
};

/// Khatri-Rao product of the two factors other than `mode`.
template <typename Scalar>
Mat<Scalar> kr_of_others(const FactorSet<Scalar>& F, int mode) {
  return khatri_rao(F.factor((mode + 1) % 3), F.factor((mode + 2) % 3));
}

/// One row per consecutive pair of iterates in `history`; `objectives[k]` is
/// the objective of history[k].
template <typename Scalar>
SwampReport<Scalar> swamp_report(const std::vector<FactorSet<Scalar>>& history, const std::vector<Scalar>& objectives,
                                 const FactorSet<Scalar>* reference = nullptr, const SwampOptions& opts = {}) {
  if (history.size() < 2) throw std::invalid_argument("swamp_report: need at least two iterates");
  if (objectives.size() != history.size()) throw std::invalid_argument("swamp_report: objectives/history size mismatch");
  SwampReport<Scalar> report;
  for (std::size_t k = 1; k < history.size(); ++k) {
    SwampRow<Scalar> row;
    row.iter = static_cast<int>(k);
    row.objective = objectives[k];
    const Scalar prev = objectives[k - 1];
    row.stall = prev > Scalar(0) && (prev - objectives[k]) / prev < Scalar(opts.tol_stall);
    for (int m = 0; m < 3; ++m) {
      const Mat<Scalar> before = kr_of_others(history[k - 1], m);
      const Mat<Scalar> after = kr_of_others(history[k], m);
      row.subspace_distance[static_cast<std::size_t>(m)] = subspace_proj_distance(before, after, opts.probe_seed, opts.probes);
      row.condition[static_cast<std::size_t>(m)] = kr_condition(before, after);
    }
    if (reference) {
      std::array<Scalar, 3> d{};
      for (int m = 0; m < 3; ++m)
        d[static_cast<std::size_t>(m)] =
            subspace_proj_distance(history[k].factor(m), reference->factor(m), opts.probe_seed, opts.probes);
      row.reference_distance = d;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace cpcp
