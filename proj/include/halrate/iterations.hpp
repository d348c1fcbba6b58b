#ifndef HALRATE_ITERATIONS_HPP
#define HALRATE_ITERATIONS_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "halrate/audit.hpp"
#include "halrate/error.hpp"
#include "halrate/maps.hpp"
#include "halrate/schedule.hpp"
#include "halrate/spaces.hpp"

namespace halrate {

enum class Scheme { halpern, sam, aim, happa };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::halpern: return "halpern";
    case Scheme::sam: return "sam";
    case Scheme::aim: return "aim";
    case Scheme::happa: return "happa";
  }
  return "?";
}

struct CrossResidual {
  std::size_t m = 0;
  std::vector<double> values;  // d(x_n, T_m x_n), n = 0..N
};

/// Iterates of one run and every residual the audits need.
///
/// For horizon N: `step` holds d(x_n, x_{n+1}) for n < N; `map`, `aux`,
/// `cross` and `dist_to_p` hold one value per n = 0..N. `aux` is
/// d(f(x_n), T x_n) for SAM, d(x_n, f(x_n)) for AIM and d(u, T_n x_n) for the
/// anchored schemes. `alpha` holds alpha_0..alpha_{N-1}, `gamma` gamma_0..gamma_N.
template <class Point>
struct Trace {
  Scheme scheme = Scheme::halpern;
  std::size_t horizon = 0;
  bool points_stored = false;
  std::vector<Point> points;
  std::vector<double> step;
  std::vector<double> map;
  std::vector<double> aux;
  std::vector<CrossResidual> cross;
  std::vector<double> dist_to_p;
  std::vector<double> alpha;
  std::vector<double> gamma;
};

template <class Point>
struct TraceOptions {
  /// Indices m for which d(x_n, T_m x_n) is recorded (HAPPA only).
  std::vector<std::size_t> cross;
  /// Reference fixed point; when set, d(x_n, p) is recorded.
  std::optional<Point> reference;
  /// Points are kept only if (N+1) * scalars-per-point stays within this cap.
  std::size_t max_scalars = 1'000'000;
};

namespace detail {

template <WSpace S>
Trace<typename S::Point> start_trace(const S& space, Scheme scheme, std::size_t horizon,
                                     const TraceOptions<typename S::Point>& opts) {
  if (horizon < 1) throw InputError("horizon must be >= 1");
  Trace<typename S::Point> t;
  t.scheme = scheme;
  t.horizon = horizon;
  t.points_stored = (horizon + 1) * space.scalars() <= opts.max_scalars;
  if (t.points_stored) t.points.reserve(horizon + 1);
  t.step.reserve(horizon);
  t.map.reserve(horizon + 1);
  t.aux.reserve(horizon + 1);
  t.alpha.reserve(horizon);
  if (opts.reference) {
    space.require(*opts.reference);
    t.dist_to_p.reserve(horizon + 1);
  }
  return t;
}

template <WSpace S>
void observe(const S& space, Trace<typename S::Point>& t, const typename S::Point& x,
             const TraceOptions<typename S::Point>& opts) {
  if (t.points_stored) t.points.push_back(x);
  if (opts.reference) t.dist_to_p.push_back(space.distance(x, *opts.reference));
}

inline void reject_gamma(const Schedule& sched, const char* scheme) {
  if (sched.has_gamma()) {
    throw InputError(std::string(scheme) + " takes an alpha-only schedule; " + sched.name() +
                     " carries a gamma sequence");
  }
}

template <WSpace S>
void require_contraction(const Map<S>& f, const Schedule& sched) {
  if (!f.is_contraction()) throw InputError("f must be a rho-contraction, got " + f.name());
  if (const auto rho = sched.rho(); rho && *rho != f.lipschitz()) {
    throw InputError("schedule built for rho=" + std::to_string(*rho) + " but f has rho=" +
                     std::to_string(f.lipschitz()));
  }
}

}  // namespace detail

/// x_{n+1} = (1 - alpha_n) u + alpha_n T x_n, i.e. combine(u, T x_n, alpha_n).
template <WSpace S>
Trace<typename S::Point> run_halpern(const S& space, const Map<S>& T, const typename S::Point& x,
                                     const typename S::Point& u, const Schedule& sched,
                                     std::size_t horizon,
                                     const TraceOptions<typename S::Point>& opts = {}) {
  detail::reject_gamma(sched, "halpern");
  sched.require_horizon(horizon);
  space.require(x);
  space.require(u);
  auto t = detail::start_trace(space, Scheme::halpern, horizon, opts);
  auto xn = x;
  for (std::size_t n = 0;; ++n) {
    detail::observe(space, t, xn, opts);
    auto tx = T(xn);
    t.map.push_back(space.distance(xn, tx));
    t.aux.push_back(space.distance(u, tx));
    if (n == horizon) break;
    const double a = sched.alpha(n);
    t.alpha.push_back(a);
    auto next = space.combine(u, tx, a);
    t.step.push_back(space.distance(xn, next));
    xn = std::move(next);
  }
  return t;
}

/// Sequential averaging: x_{n+1} = (1 - alpha_n) f(x_n) + alpha_n T x_n.
template <WSpace S>
Trace<typename S::Point> run_sam(const S& space, const Map<S>& T, const Map<S>& f,
                                 const typename S::Point& x, const Schedule& sched, std::size_t horizon,
                                 const TraceOptions<typename S::Point>& opts = {}) {
  detail::reject_gamma(sched, "sam");
  detail::require_contraction(f, sched);
  sched.require_horizon(horizon);
  space.require(x);
  auto t = detail::start_trace(space, Scheme::sam, horizon, opts);
  auto xn = x;
  for (std::size_t n = 0;; ++n) {
    detail::observe(space, t, xn, opts);
    auto tx = T(xn);
    auto fx = f(xn);
    t.map.push_back(space.distance(xn, tx));
    t.aux.push_back(space.distance(fx, tx));
    if (n == horizon) break;
    const double a = sched.alpha(n);
    t.alpha.push_back(a);
    auto next = space.combine(fx, tx, a);
    t.step.push_back(space.distance(xn, next));
    xn = std::move(next);
  }
  return t;
}

/// Alternative iterative method: x_{n+1} = T((1 - alpha_n) f(x_n) + alpha_n x_n).
template <WSpace S>
Trace<typename S::Point> run_aim(const S& space, const Map<S>& T, const Map<S>& f,
                                 const typename S::Point& x, const Schedule& sched, std::size_t horizon,
                                 const TraceOptions<typename S::Point>& opts = {}) {
  detail::reject_gamma(sched, "aim");
  detail::require_contraction(f, sched);
  sched.require_horizon(horizon);
  space.require(x);
  auto t = detail::start_trace(space, Scheme::aim, horizon, opts);
  auto xn = x;
  for (std::size_t n = 0;; ++n) {
    detail::observe(space, t, xn, opts);
    auto fx = f(xn);
    t.map.push_back(space.distance(xn, T(xn)));
    t.aux.push_back(space.distance(xn, fx));
    if (n == horizon) break;
    const double a = sched.alpha(n);
    t.alpha.push_back(a);
    auto next = T(space.combine(fx, xn, a));
    t.step.push_back(space.distance(xn, next));
    xn = std::move(next);
  }
  return t;
}

/// Halpern-type proximal point iteration
/// x_{n+1} = (1 - alpha_n) u + alpha_n T_n x_n with T_n = family.resolve(gamma_n, .).
template <WSpace S>
Trace<typename S::Point> run_happa(const S& space, const ResolventFamily<S>& family,
                                   const typename S::Point& x, const typename S::Point& u,
                                   const Schedule& sched, std::size_t horizon,
                                   const TraceOptions<typename S::Point>& opts = {}) {
  if (!sched.has_gamma()) throw InputError("happa requires a gamma schedule, got " + sched.name());
  sched.require_horizon(horizon);
  space.require(x);
  space.require(u);
  auto t = detail::start_trace(space, Scheme::happa, horizon, opts);
  std::vector<double> cross_gamma;
  for (std::size_t m : opts.cross) {
    t.cross.push_back({m, {}});
    t.cross.back().values.reserve(horizon + 1);
    cross_gamma.push_back(sched.gamma(m));
  }
  t.gamma.reserve(horizon + 1);
  auto xn = x;
  for (std::size_t n = 0;; ++n) {
    detail::observe(space, t, xn, opts);
    const double g = sched.gamma(n);
    t.gamma.push_back(g);
    auto tx = family.resolve(g, xn);
    t.map.push_back(space.distance(xn, tx));
    t.aux.push_back(space.distance(u, tx));
    for (std::size_t i = 0; i < cross_gamma.size(); ++i) {
      t.cross[i].values.push_back(space.distance(xn, family.resolve(cross_gamma[i], xn)));
    }
    if (n == horizon) break;
    const double a = sched.alpha(n);
    t.alpha.push_back(a);
    auto next = space.combine(u, tx, a);
    t.step.push_back(space.distance(xn, next));
    xn = std::move(next);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Per-step audits. Slack is 1e-10 * (1 + M) throughout.

inline double lemma_tolerance(double M) { return 1e-10 * (1.0 + M); }

/// d(x_n, p) <= M + 1e-9 for every recorded n.
template <class Point>
AuditReport audit_boundedness(const Trace<Point>& t, double M) {
  AuditReport r(std::string("bounded/") + to_string(t.scheme));
  if (t.dist_to_p.empty()) throw InputError("trace was generated without a reference point");
  for (std::size_t n = 0; n < t.dist_to_p.size(); ++n) r.record_inequality("d(x_n,p)<=M", n, t.dist_to_p[n], M, 1e-9);
  return r;
}

/// SAM per-step inequalities (also valid for Halpern traces with f = const u, rho = 0):
///   d(x_{n+2},x_{n+1}) <= (1-(1-rho)(1-a_{n+1})) d(x_{n+1},x_n) + |a_{n+1}-a_n| d(f x_n, T x_n)
///   d(x_n, T x_n)      <= d(x_n, x_{n+1}) + (1-a_n) d(f x_n, T x_n)
///   d(f x_n, T x_n)    <= 2M
template <class Point>
AuditReport audit_sam_lemma(const Trace<Point>& t, double rho, double M) {
  AuditReport r(std::string("lemma/") + to_string(t.scheme));
  const double tol = lemma_tolerance(M);
  const auto& a = t.alpha;
  for (std::size_t n = 0; n + 2 <= t.horizon; ++n) {
    const double rhs = (1.0 - (1.0 - rho) * (1.0 - a[n + 1])) * t.step[n] + std::abs(a[n + 1] - a[n]) * t.aux[n];
    r.record_inequality("step-recursion", n, t.step[n + 1], rhs, tol);
  }
  for (std::size_t n = 0; n < t.horizon; ++n) {
    r.record_inequality("map-vs-step", n, t.map[n], t.step[n] + (1.0 - a[n]) * t.aux[n], tol);
  }
  for (std::size_t n = 0; n < t.aux.size(); ++n) r.record_inequality("d(f x_n,T x_n)<=2M", n, t.aux[n], 2.0 * M, tol);
  return r;
}

/// AIM per-step inequalities:
///   d(x_{n+2},x_{n+1}) <= (1-(1-rho)(1-a_{n+1})) d(x_{n+1},x_n) + |a_n-a_{n+1}| d(x_n, f x_n)
///   d(x_n, T x_n)      <= d(x_{n+1},x_n) + (1-a_n) d(x_n, f x_n)
///   d(x_n, f x_n)      <= 2M
template <class Point>
AuditReport audit_aim_lemma(const Trace<Point>& t, double rho, double M) {
  if (t.scheme != Scheme::aim) throw InputError("aim lemma audit needs an aim trace");
  // Same algebraic shape as SAM with aux = d(x_n, f x_n).
  auto r = audit_sam_lemma(t, rho, M);
  r.subject = "lemma/aim";
  return r;
}

/// HAPPA per-step inequalities:
///   d(x_{n+2},x_{n+1}) <= a_{n+1} d(x_{n+1},x_n) + 2M a_{n+1}|g_n-g_{n+1}|/g_n + 2M|a_{n+1}-a_n|
///   d(x_n, T_n x_n)    <= d(x_n,x_{n+1}) + 2M(1-a_n)
///   d(x_n, T_m x_n)    <= (1 + |g_n-g_m|/g_n) d(x_n, T_n x_n)      (each recorded m)
template <class Point>
AuditReport audit_happa_lemma(const Trace<Point>& t, double M, const Schedule& sched) {
  if (t.scheme != Scheme::happa) throw InputError("happa lemma audit needs a happa trace");
  AuditReport r("lemma/happa");
  const double tol = lemma_tolerance(M);
  const auto& a = t.alpha;
  const auto& g = t.gamma;
  for (std::size_t n = 0; n + 2 <= t.horizon; ++n) {
    const double rhs = a[n + 1] * t.step[n] + 2.0 * M * a[n + 1] * std::abs(g[n] - g[n + 1]) / g[n] +
                       2.0 * M * std::abs(a[n + 1] - a[n]);
    r.record_inequality("step-recursion", n, t.step[n + 1], rhs, tol);
  }
  for (std::size_t n = 0; n < t.horizon; ++n) {
    r.record_inequality("family-vs-step", n, t.map[n], t.step[n] + 2.0 * M * (1.0 - a[n]), tol);
  }
  for (const auto& c : t.cross) {
    const double gm = sched.gamma(c.m);
    for (std::size_t n = 0; n < c.values.size(); ++n) {
      const double factor = 1.0 + std::abs(g[n] - gm) / g[n];
      r.record_inequality("cross-vs-family", n, c.values[n], factor * t.map[n], tol);
    }
  }
  return r;
}

}  // namespace halrate

#endif  // HALRATE_ITERATIONS_HPP
