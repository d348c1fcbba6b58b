#ifndef HALRATE_RATES_HPP
#define HALRATE_RATES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halrate/error.hpp"
#include "halrate/iterations.hpp"
#include "halrate/random.hpp"
#include "halrate/schedule.hpp"

namespace halrate {

// ---------------------------------------------------------------------------
// Sabach-Shtern lemma as an executable check
//
// Given L > 0, J >= N >= 2, gamma in (0,1], c_n <= L, a_n = N / (gamma (n+J)),
// s_0 <= L and s_{n+1} <= (1 - gamma a_{n+1}) s_n + (a_n - a_{n+1}) c_n,
// the conclusion is s_n <= J L / (gamma (n+J)).

struct SabachShternInstance {
  double L = 1.0;
  std::size_t J = 2;
  std::size_t N = 2;
  double gamma = 1.0;
  std::vector<double> s;  // s_0..s_h
  std::vector<double> c;  // c_0..c_{h-1}

  double a(std::size_t n) const {
    return static_cast<double>(N) / (gamma * (static_cast<double>(n) + static_cast<double>(J)));
  }

  double bound(std::size_t n) const {
    return static_cast<double>(J) * L / (gamma * (static_cast<double>(n) + static_cast<double>(J)));
  }

  double recurrence_rhs(std::size_t n, double s_n) const {
    return (1.0 - gamma * a(n + 1)) * s_n + (a(n) - a(n + 1)) * c[n];
  }

  void validate(std::size_t horizon) const {
    if (!(L > 0.0)) throw InputError("Sabach-Shtern: L must be > 0");
    if (N < 2 || J < N) throw InputError("Sabach-Shtern: need J >= N >= 2");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InputError("Sabach-Shtern: gamma must lie in (0,1]");
    if (s.size() < horizon + 1 || c.size() < horizon) {
      throw InputError("Sabach-Shtern: sequences shorter than the horizon");
    }
    if (!(s[0] <= L)) throw InputError("Sabach-Shtern: s_0 must be <= L");
    for (std::size_t n = 0; n <= horizon; ++n) {
      if (!(s[n] >= 0.0)) throw InputError("Sabach-Shtern: s_n must be nonnegative");
    }
    for (std::size_t n = 0; n < horizon; ++n) {
      if (!(c[n] <= L)) throw InputError("Sabach-Shtern: c_n must be <= L");
    }
  }
};

struct SabachShternResult {
  bool hypothesis_ok = true;
  bool conclusion_ok = true;
  double worst_hypothesis_margin = std::numeric_limits<double>::infinity();
  double worst_conclusion_margin = std::numeric_limits<double>::infinity();
  std::size_t worst_hypothesis_n = 0;
  std::size_t worst_conclusion_n = 0;

  /// The lemma itself: the hypothesis implies the conclusion.
  bool sound() const { return !hypothesis_ok || conclusion_ok; }
};

/// Margins are rhs - lhs; both checks allow slack 1e-12 * (1 + L).
inline SabachShternResult sabach_shtern_check(const SabachShternInstance& inst, std::size_t horizon) {
  inst.validate(horizon);
  const double tol = 1e-12 * (1.0 + inst.L);
  SabachShternResult r;
  for (std::size_t n = 0; n < horizon; ++n) {
    const double margin = inst.recurrence_rhs(n, inst.s[n]) - inst.s[n + 1];
    if (margin < r.worst_hypothesis_margin) {
      r.worst_hypothesis_margin = margin;
      r.worst_hypothesis_n = n;
    }
  }
  for (std::size_t n = 0; n <= horizon; ++n) {
    const double margin = inst.bound(n) - inst.s[n];
    if (margin < r.worst_conclusion_margin) {
      r.worst_conclusion_margin = margin;
      r.worst_conclusion_n = n;
    }
  }
  r.hypothesis_ok = r.worst_hypothesis_margin >= -tol;
  r.conclusion_ok = r.worst_conclusion_margin >= -tol;
  return r;
}

/// The instance c = L, gamma = 1, N = J = 2 with s_0 = L and the recurrence
/// taken with equality; it meets the bound 2L/(n+2) at every n.
inline SabachShternInstance sabach_shtern_equality_instance(double L, std::size_t horizon) {
  SabachShternInstance inst;
  inst.L = L;
  inst.J = 2;
  inst.N = 2;
  inst.gamma = 1.0;
  inst.c.assign(horizon, L);
  inst.s.reserve(horizon + 1);
  inst.s.push_back(L);
  for (std::size_t n = 0; n < horizon; ++n) inst.s.push_back(inst.recurrence_rhs(n, inst.s[n]));
  return inst;
}

/// Random instance satisfying the hypothesis: random L, gamma, N <= J, c_n <= L
/// (often exactly L, sometimes negative), and s_{n+1} equal to the recurrence
/// right-hand side minus a random nonnegative slack.
inline SabachShternInstance random_sabach_shtern_instance(Rng& rng, std::size_t horizon) {
  SabachShternInstance inst;
  inst.L = rng.uniform(0.1, 10.0);
  inst.gamma = rng.bernoulli(0.25) ? 1.0 : rng.uniform(0.05, 1.0);
  inst.N = static_cast<std::size_t>(rng.integer(2, 8));
  inst.J = inst.N + static_cast<std::size_t>(rng.integer(0, 20));
  inst.s.reserve(horizon + 1);
  inst.c.reserve(horizon);
  inst.s.push_back(rng.bernoulli(0.5) ? inst.L : rng.uniform(0.0, inst.L));
  const double tight = rng.uniform();  // fraction of steps taken with equality
  for (std::size_t n = 0; n < horizon; ++n) {
    const double s_n = inst.s[n];
    const double da = inst.a(n) - inst.a(n + 1);
    double c = rng.bernoulli(0.5) ? inst.L : rng.uniform(-inst.L, inst.L);
    // keep the right-hand side nonnegative so a nonnegative s_{n+1} exists
    c = std::max(c, -(1.0 - inst.gamma * inst.a(n + 1)) * s_n / da);
    c = std::min(c, inst.L);
    inst.c.push_back(c);
    const double rhs = std::max(inst.recurrence_rhs(n, s_n), 0.0);
    inst.s.push_back(rng.uniform() < tight ? rhs : rhs * rng.uniform());
  }
  return inst;
}

struct SabachShternSweep {
  std::size_t instances = 0;
  std::size_t hypothesis_held = 0;
  std::size_t counterexamples = 0;
  double worst_conclusion_margin = std::numeric_limits<double>::infinity();
  double witness_max_error = 0.0;  // equality instance vs 2L/(n+2)

  bool passed() const { return counterexamples == 0 && hypothesis_held == instances && witness_max_error <= 1e-12; }
};

/// Runs `count` seeded random instances plus the equality witness (L = 1).
inline SabachShternSweep sabach_shtern_sweep(std::size_t count, std::size_t horizon, std::uint64_t seed) {
  SabachShternSweep out;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto inst = random_sabach_shtern_instance(rng, horizon);
    const auto r = sabach_shtern_check(inst, horizon);
    ++out.instances;
    if (r.hypothesis_ok) ++out.hypothesis_held;
    if (!r.sound()) ++out.counterexamples;
    out.worst_conclusion_margin = std::min(out.worst_conclusion_margin, r.worst_conclusion_margin);
  }
  const auto witness = sabach_shtern_equality_instance(1.0, horizon);
  for (std::size_t n = 0; n <= horizon; ++n) {
    out.witness_max_error =
        std::max(out.witness_max_error, std::abs(witness.s[n] - 2.0 / (static_cast<double>(n) + 2.0)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// The M constant

enum class MRecipe { halpern, sam_aim, happa };

struct MConstant {
  long long value = 1;
  MRecipe recipe = MRecipe::halpern;
  double required = 0.0;  // the real quantity M has to dominate
};

/// M = max(1, ceil(required)) where required is max{d(x,p), d(u,p)} for the
/// anchored schemes and max{d(x,p), d(p,f(p))/(1-rho)} for SAM/AIM.
inline MConstant compute_M(MRecipe recipe, double d_x_p, double d_other, std::optional<double> rho = std::nullopt) {
  double required = 0.0;
  if (recipe == MRecipe::sam_aim) {
    if (!rho) throw InputError("sam/aim M recipe needs rho");
    if (!(*rho >= 0.0 && *rho < 1.0)) throw InputError("rho must be < 1");
    required = std::max(d_x_p, d_other / (1.0 - *rho));
  } else {
    required = std::max(d_x_p, d_other);
  }
  if (!(required >= 0.0) || !std::isfinite(required)) throw InputError("M recipe produced a non-finite value");
  const auto value = std::max<long long>(1, static_cast<long long>(std::ceil(required)));
  return {value, recipe, required};
}

template <WSpace S>
MConstant compute_M_anchored(const S& space, MRecipe recipe, const typename S::Point& x,
                             const typename S::Point& u, const typename S::Point& p) {
  return compute_M(recipe, space.distance(x, p), space.distance(u, p));
}

template <WSpace S>
MConstant compute_M_contraction(const S& space, const typename S::Point& x, const Map<S>& f,
                                const typename S::Point& p) {
  return compute_M(MRecipe::sam_aim, space.distance(x, p), space.distance(p, f(p)), f.lipschitz());
}

// ---------------------------------------------------------------------------
// Rate functions and certification

enum class ResidualKind { step, map, family, cross };

inline const char* to_string(ResidualKind k) {
  switch (k) {
    case ResidualKind::step: return "step";
    case ResidualKind::map: return "map";
    case ResidualKind::family: return "family";
    case ResidualKind::cross: return "cross";
  }
  return "?";
}

/// phi(k) = slope * (k+1) - offset, floored at 0.
struct LinearRate {
  long long slope = 1;
  long long offset = 0;

  std::size_t operator()(std::size_t k) const {
    const long long v = slope * static_cast<long long>(k + 1) - offset;
    return v < 0 ? 0 : static_cast<std::size_t>(v);
  }
};

/// n -> coeff / (n + shift), defined for n >= first_n.
struct BoundCurve {
  double coeff = 1.0;
  double shift = 1.0;
  std::size_t first_n = 0;

  double operator()(std::size_t n) const { return coeff / (static_cast<double>(n) + shift); }
};

struct RateFunction {
  std::string name;
  LinearRate phi;
  ResidualKind kind = ResidualKind::step;
  std::size_t cross_m = 0;  // for kind == cross
  std::optional<BoundCurve> curve;
  /// phi is the exact inverse of the curve: curve(phi(k)) == 1/(k+1). When
  /// false, only curve(phi(k)) <= 1/(k+1) is required.
  bool exact_identity = false;
};

enum class Catalog { halpern_prop2, lieder, sam, happa };

inline const char* to_string(Catalog c) {
  switch (c) {
    case Catalog::halpern_prop2: return "halpern";
    case Catalog::lieder: return "lieder";
    case Catalog::sam: return "sam";
    case Catalog::happa: return "happa";
  }
  return "?";
}

struct RateParams {
  long long M = 1;
  double rho = 0.0;
  double x0_dist = 0.0;            // ||x_0 - p||, Lieder bound only
  std::vector<std::size_t> cross;  // HAPPA: one cross rate per m
};

/// Rate functions and bound curves for a scheme/schedule pairing:
///   halpern: 8M(k+1)-1 (step), 16M(k+1)-1 (map); no pointwise curves.
///   lieder:  2M(k+1)-1 with curve 2||x_0-p||/(n+1), n >= 1 (map).
///   sam/aim: c = ceil(1/(1-rho)), J = 2c;
///            4Mc^2(k+1)-2c with curve 2MJ/((1-rho)(n+J)) (step),
///            (4Mc^2+4Mc)(k+1)-2c with curve 2M(J+2)/((1-rho)(n+J)) (map).
///   happa:   6M(k+1)-2 / 6M/(n+2) (step), 10M(k+1)-2 / 10M/(n+2) (family),
///            20M(k+1)-2 / 20M/(n+2) (each cross index m).
inline std::vector<RateFunction> rate_catalog(Catalog catalog, const RateParams& params) {
  const long long M = params.M;
  if (M < 1) throw InputError("M must be a positive integer");
  std::vector<RateFunction> out;
  switch (catalog) {
    case Catalog::halpern_prop2:
      out.push_back({"halpern.step", {8 * M, 1}, ResidualKind::step, 0, std::nullopt});
      out.push_back({"halpern.map", {16 * M, 1}, ResidualKind::map, 0, std::nullopt});
      break;
    case Catalog::lieder:
      // M >= ||x_0 - p||, so phi only dominates the inverse of the curve.
      out.push_back({"lieder.map", {2 * M, 1}, ResidualKind::map, 0, BoundCurve{2.0 * params.x0_dist, 1.0, 1}, false});
      break;
    case Catalog::sam: {
      const long long c = inverse_gap_ceil(params.rho);
      const long long J = 2 * c;
      const double gap = 1.0 - params.rho;
      const auto Md = static_cast<double>(M);
      const auto Jd = static_cast<double>(J);
      // curve(phi(k)) = 1 / ((1-rho) c (k+1)): exact only when 1/(1-rho) is an integer.
      const bool exact = std::abs(gap * static_cast<double>(c) - 1.0) <= 1e-12;
      out.push_back({"sam.step", {4 * M * c * c, 2 * c}, ResidualKind::step, 0,
                     BoundCurve{2.0 * Md * Jd / gap, Jd, 0}, exact});
      out.push_back({"sam.map", {4 * M * c * c + 4 * M * c, 2 * c}, ResidualKind::map, 0,
                     BoundCurve{2.0 * Md * (Jd + 2.0) / gap, Jd, 0}, exact});
      break;
    }
    case Catalog::happa: {
      const auto Md = static_cast<double>(M);
      out.push_back({"happa.step", {6 * M, 2}, ResidualKind::step, 0, BoundCurve{6.0 * Md, 2.0, 0}, true});
      out.push_back({"happa.family", {10 * M, 2}, ResidualKind::family, 0, BoundCurve{10.0 * Md, 2.0, 0}, true});
      for (std::size_t m : params.cross) {
        out.push_back({"happa.cross[" + std::to_string(m) + "]", {20 * M, 2}, ResidualKind::cross, m,
                       BoundCurve{20.0 * Md, 2.0, 0}, true});
      }
      break;
    }
  }
  return out;
}

struct RateWitness {
  std::size_t k = 0;
  std::size_t n = 0;
  double value = 0.0;
  double threshold = 0.0;
};

struct RateReport {
  std::string name;
  bool rate_ok = true;
  bool curve_ok = true;
  bool identity_ok = true;
  std::size_t checked_k = 0;
  std::size_t unchecked_k = 0;  // phi(k) beyond the horizon
  double worst_rate_slack = std::numeric_limits<double>::infinity();
  double worst_curve_slack = std::numeric_limits<double>::infinity();
  /// max over k of curve(phi(k)) - 1/(k+1); must not exceed 1e-9.
  double identity_residual = -std::numeric_limits<double>::infinity();
  /// |curve(phi(k)) - 1/(k+1)| <= 1e-9 for every k, i.e. phi is exactly the
  /// inverse of the curve rather than merely sound.
  bool identity_exact = true;
  std::optional<RateWitness> rate_witness;
  std::optional<RateWitness> curve_witness;  // k unused

  bool passed() const { return rate_ok && curve_ok && identity_ok; }
};

inline constexpr double kCertifySlack = 1e-9;

/// Compares curve(phi(k)) against 1/(k+1) for k = 0..k_max. Pure algebra,
/// independent of any trace.
inline void check_rate_curve_identity(const RateFunction& rf, std::size_t k_max, RateReport& report) {
  if (!rf.curve) return;
  for (std::size_t k = 0; k <= k_max; ++k) {
    const std::size_t n = std::max(rf.phi(k), rf.curve->first_n);
    const double diff = (*rf.curve)(n) - 1.0 / static_cast<double>(k + 1);
    report.identity_residual = std::max(report.identity_residual, diff);
    if (std::abs(diff) > kCertifySlack) report.identity_exact = false;
  }
  report.identity_ok = report.identity_residual <= kCertifySlack && (report.identity_exact || !rf.exact_identity);
}

/// Certifies a residual sequence b_0..b_H against a rate function:
///  (a) for k <= k_max with phi(k) <= H: b_n <= 1/(k+1) + 1e-9 for all phi(k) <= n <= H;
///  (b) when a curve is present: b_n <= curve(n) + 1e-9 for all first_n <= n <= H;
///  (c) curve(phi(k)) <= 1/(k+1) + 1e-9 for k <= max(k_max, 100), with
///      equality to 1e-9 when the rate is flagged exact_identity.
inline RateReport certify_series(std::span<const double> b, const RateFunction& rf, std::size_t k_max) {
  RateReport r;
  r.name = rf.name;
  if (b.empty()) throw InputError("empty residual series");
  const std::size_t H = b.size() - 1;

  // suffix maxima: best[n] = argmax_{j >= n} b_j
  std::vector<std::size_t> best(b.size());
  best[H] = H;
  for (std::size_t n = H; n-- > 0;) best[n] = b[n] >= b[best[n + 1]] ? n : best[n + 1];

  for (std::size_t k = 0; k <= k_max; ++k) {
    const std::size_t start = rf.phi(k);
    if (start > H) {
      ++r.unchecked_k;
      continue;
    }
    ++r.checked_k;
    const double threshold = 1.0 / static_cast<double>(k + 1);
    const std::size_t n = best[start];
    const double slack = threshold - b[n];
    if (slack < r.worst_rate_slack) r.worst_rate_slack = slack;
    if (slack < -kCertifySlack && r.rate_ok) {
      r.rate_ok = false;
      r.rate_witness = RateWitness{k, n, b[n], threshold};
    }
  }

  if (rf.curve) {
    for (std::size_t n = rf.curve->first_n; n <= H; ++n) {
      const double bound = (*rf.curve)(n);
      const double slack = bound - b[n];
      if (slack < r.worst_curve_slack) r.worst_curve_slack = slack;
      if (slack < -kCertifySlack && r.curve_ok) {
        r.curve_ok = false;
        r.curve_witness = RateWitness{0, n, b[n], bound};
      }
    }
    check_rate_curve_identity(rf, std::max<std::size_t>(k_max, 100), r);
  }
  return r;
}

/// The residual sequence of `t` that `rf` speaks about.
template <class Point>
std::span<const double> residual_series(const Trace<Point>& t, const RateFunction& rf) {
  switch (rf.kind) {
    case ResidualKind::step: return t.step;
    case ResidualKind::map:
      if (t.scheme == Scheme::happa) throw InputError(rf.name + ": happa traces carry family residuals");
      return t.map;
    case ResidualKind::family:
      if (t.scheme != Scheme::happa) throw InputError(rf.name + ": family residuals need a happa trace");
      return t.map;
    case ResidualKind::cross:
      for (const auto& c : t.cross) {
        if (c.m == rf.cross_m) return c.values;
      }
      throw InputError(rf.name + ": trace has no cross residual for m=" + std::to_string(rf.cross_m));
  }
  return {};
}

template <class Point>
RateReport certify(const Trace<Point>& t, const RateFunction& rf, std::size_t k_max) {
  return certify_series(residual_series(t, rf), rf, k_max);
}

}  // namespace halrate

#endif  // HALRATE_RATES_HPP
