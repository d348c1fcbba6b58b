#ifndef HALRATE_MAPS_HPP
#define HALRATE_MAPS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "halrate/audit.hpp"
#include "halrate/error.hpp"
#include "halrate/random.hpp"
#include "halrate/spaces.hpp"

namespace halrate {

enum class MapKind { nonexpansive, contraction, constant };

inline const char* to_string(MapKind kind) {
  switch (kind) {
    case MapKind::nonexpansive: return "nonexpansive";
    case MapKind::contraction: return "contraction";
    case MapKind::constant: return "constant";
  }
  return "?";
}

/// A self-map of a space together with its declared Lipschitz class.
/// Constant maps are 0-contractions.
template <WSpace S>
class Map {
 public:
  using Point = typename S::Point;
  using Fn = std::function<Point(const Point&)>;

  Map(S space, std::string name, MapKind kind, double lipschitz, Fn fn)
      : space_(std::move(space)), name_(std::move(name)), kind_(kind), lipschitz_(lipschitz),
        fn_(std::move(fn)) {
    if (kind_ == MapKind::contraction && !(lipschitz_ >= 0.0 && lipschitz_ < 1.0)) {
      throw InputError("contraction modulus rho must satisfy 0 <= rho < 1");
    }
  }

  Point operator()(const Point& x) const {
    space_.require(x);
    return fn_(x);
  }

  Point apply(const Point& x) const { return (*this)(x); }

  const S& space() const { return space_; }
  const std::string& name() const { return name_; }
  MapKind kind() const { return kind_; }

  /// 1 for nonexpansive maps, rho for contractions, 0 for constants.
  double lipschitz() const { return lipschitz_; }

  bool is_contraction() const { return kind_ != MapKind::nonexpansive; }

 private:
  S space_;
  std::string name_;
  MapKind kind_;
  double lipschitz_;
  Fn fn_;
};

template <WSpace S>
Map<S> identity_map(const S& space) {
  return {space, "identity", MapKind::nonexpansive, 1.0, [](const auto& x) { return x; }};
}

inline Map<Euclid> negation_map(const Euclid& space) {
  return {space, "negation", MapKind::nonexpansive, 1.0, [](const Euclid::Point& x) -> Euclid::Point { return -x; }};
}

/// Planar rotation about the origin by `degrees`.
inline Map<Euclid> rotation_map(const Euclid& space, double degrees) {
  if (space.dim() != 2) throw InputError("rotation requires euclid dimension 2");
  // Quarter turns are snapped to exact entries so the fixed point 0 and the
  // iterates avoid cos(pi/2) rounding noise.
  const double turns = degrees / 90.0;
  double c = std::cos(degrees * std::numbers::pi / 180.0);
  double s = std::sin(degrees * std::numbers::pi / 180.0);
  if (turns == std::round(turns)) {
    static constexpr double kCos[] = {1, 0, -1, 0};
    static constexpr double kSin[] = {0, 1, 0, -1};
    const auto q = static_cast<int>(((static_cast<long long>(turns) % 4) + 4) % 4);
    c = kCos[q];
    s = kSin[q];
  }
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  return {space, "rotation", MapKind::nonexpansive, 1.0,
          [rot](const Euclid::Point& x) -> Euclid::Point { return rot * x; }};
}

/// Swaps rays `a` and `b`; fixes the remaining ray pointwise.
inline Map<Tripod> ray_swap_map(const Tripod& space, int a = 0, int b = 1) {
  if (a == b || a < 0 || b < 0 || a >= TripodPoint::kRays || b >= TripodPoint::kRays) {
    throw InputError("ray_swap needs two distinct rays in {0,1,2}");
  }
  return {space, "ray_swap", MapKind::nonexpansive, 1.0,
          [a, b](const TripodPoint& x) { return Tripod::swap_rays(x, a, b); }};
}

template <WSpace S>
Map<S> constant_map(const S& space, typename S::Point u) {
  space.require(u);
  return {space, "constant", MapKind::constant, 0.0, [u = std::move(u)](const auto&) { return u; }};
}

/// f(x) = (1-rho) c + rho x, a rho-contraction in any W-hyperbolic space
/// (by W4 with equal first arguments); its unique fixed point is c.
template <WSpace S>
Map<S> contraction_toward(const S& space, typename S::Point center, double rho) {
  space.require(center);
  if (rho == 0.0) {
    auto m = constant_map(space, std::move(center));
    return {space, "contraction_toward", MapKind::contraction, 0.0,
            [m](const auto& x) { return m(x); }};
  }
  return {space, "contraction_toward", MapKind::contraction, rho,
          [space, center = std::move(center), rho](const auto& x) {
            return space.combine(center, x, rho);
          }};
}

/// x -> A x with a caller-declared Lipschitz class; used to build
/// deliberately mislabeled maps in tests.
inline Map<Euclid> linear_map(const Euclid& space, Eigen::MatrixXd matrix, MapKind kind,
                              double declared_lipschitz, std::string name = "linear") {
  if (matrix.rows() != static_cast<Eigen::Index>(space.dim()) || matrix.cols() != matrix.rows()) {
    throw InputError("linear map matrix must be dim x dim");
  }
  return {space, std::move(name), kind, declared_lipschitz,
          [m = std::move(matrix)](const Euclid::Point& x) -> Euclid::Point { return m * x; }};
}

// ---------------------------------------------------------------------------
// Lipschitz audit

template <class Point>
using PointPair = std::pair<Point, Point>;

template <WSpace S>
std::vector<PointPair<typename S::Point>> make_pairs(const S& space, std::size_t count,
                                                     std::uint64_t seed, double radius = 10.0) {
  Rng rng(seed);
  std::vector<PointPair<typename S::Point>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto x = space.sample(rng, radius);
    auto y = space.sample(rng, radius);
    out.emplace_back(std::move(x), std::move(y));
  }
  return out;
}

struct LipschitzReport {
  AuditReport audit;
  double declared = 1.0;
  double worst_ratio = 0.0;
  std::size_t worst_pair = 0;

  bool passed() const { return audit.passed(); }
};

/// Checks d(m x, m y) <= L d(x,y) + 1e-12 * scale on the given pairs, where
/// L is the map's declared constant and scale = 1 + d(x,y).
template <WSpace S>
LipschitzReport lipschitz_audit(const Map<S>& m, std::span<const PointPair<typename S::Point>> pairs,
                                std::uint64_t seed = 0) {
  LipschitzReport out{AuditReport("lipschitz/" + m.name(), seed), m.lipschitz(), 0.0, 0};
  const auto& space = m.space();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [x, y] = pairs[i];
    const double dxy = space.distance(x, y);
    const double dm = space.distance(m(x), m(y));
    out.audit.record_inequality("lipschitz", i, dm, m.lipschitz() * dxy, 1e-12 * (1.0 + dxy));
    if (dxy > 0.0 && dm / dxy > out.worst_ratio) {
      out.worst_ratio = dm / dxy;
      out.worst_pair = i;
    }
  }
  return out;
}

template <WSpace S>
LipschitzReport lipschitz_audit(const Map<S>& m, std::size_t count, std::uint64_t seed) {
  const auto pairs = make_pairs(m.space(), count, seed);
  return lipschitz_audit(m, std::span<const PointPair<typename S::Point>>(pairs), seed);
}

// ---------------------------------------------------------------------------
// Resolvents

/// Throws unless `a` is square, symmetric within 1e-12 and has no eigenvalue
/// below -1e-10.
inline void validate_psd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InputError("operator matrix must be square");
  if (!((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12)) {
    throw InputError("operator matrix must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < -1e-10) {
    throw InputError("operator matrix must be positive semidefinite");
  }
}

namespace detail {

inline Eigen::VectorXd solve_shifted(const Eigen::MatrixXd& a, double gamma, const Eigen::VectorXd& x) {
  if (x.size() != a.rows()) throw InputError("resolvent argument dimension mismatch");
  const Eigen::MatrixXd shifted = Eigen::MatrixXd::Identity(a.rows(), a.cols()) + gamma * a;
  Eigen::VectorXd y = shifted.llt().solve(x);
  const double residual = (shifted * y - x).norm();
  if (!(residual <= 1e-10 * (1.0 + x.norm()))) {
    throw std::runtime_error("resolvent linear solve did not meet its residual bound");
  }
  return y;
}

inline void require_positive_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("resolvent order gamma must be > 0");
}

}  // namespace detail

/// J_{gamma A} x = (I + gamma A)^{-1} x for a symmetric PSD matrix A.
inline Eigen::VectorXd resolve_linear(const Eigen::MatrixXd& a, double gamma, const Eigen::VectorXd& x) {
  detail::require_positive_gamma(gamma);
  validate_psd(a);
  return detail::solve_shifted(a, gamma, x);
}

/// Resolvent of the subdifferential of w * ||.||_1: componentwise soft threshold at gamma * w.
inline Eigen::VectorXd prox_l1(double w, double gamma, const Eigen::VectorXd& x) {
  if (!(w >= 0.0)) throw InputError("l1 weight must be >= 0");
  detail::require_positive_gamma(gamma);
  const double threshold = gamma * w;
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double mag = std::max(std::abs(x[i]) - threshold, 0.0);
    y[i] = std::copysign(mag, x[i]);
    if (mag == 0.0) y[i] = 0.0;
  }
  return y;
}

/// Jost resolvent of f = d(., a)^2 / 2, i.e. argmin_y f(y) + d(x,y)^2 / (2 gamma).
/// The minimizer sits on the geodesic [x, a] at fraction gamma / (1 + gamma).
template <WSpace S>
typename S::Point jost_resolve(const S& space, const typename S::Point& anchor, double gamma,
                               const typename S::Point& x) {
  detail::require_positive_gamma(gamma);
  return space.combine(x, anchor, gamma / (1.0 + gamma));
}

/// A gamma-indexed family of nonexpansive maps with a common fixed point.
template <WSpace S>
class ResolventFamily {
 public:
  using Point = typename S::Point;
  using Fn = std::function<Point(double, const Point&)>;

  ResolventFamily(S space, std::string name, Fn resolve)
      : space_(std::move(space)), name_(std::move(name)), resolve_(std::move(resolve)) {}

  Point resolve(double gamma, const Point& x) const {
    detail::require_positive_gamma(gamma);
    space_.require(x);
    return resolve_(gamma, x);
  }

  Map<S> member(double gamma) const {
    detail::require_positive_gamma(gamma);
    return {space_, name_ + "[gamma=" + std::to_string(gamma) + "]", MapKind::nonexpansive, 1.0,
            [fn = resolve_, gamma](const Point& x) { return fn(gamma, x); }};
  }

  const S& space() const { return space_; }
  const std::string& name() const { return name_; }

 private:
  S space_;
  std::string name_;
  Fn resolve_;
};

inline ResolventFamily<Euclid> linear_psd_family(const Euclid& space, Eigen::MatrixXd a) {
  validate_psd(a);
  if (a.rows() != static_cast<Eigen::Index>(space.dim())) throw InputError("operator matrix must be dim x dim");
  return {space, "linear_psd", [a = std::move(a)](double gamma, const Eigen::VectorXd& x) {
            return detail::solve_shifted(a, gamma, x);
          }};
}

inline ResolventFamily<Euclid> l1_family(const Euclid& space, double w) {
  if (!(w >= 0.0)) throw InputError("l1 weight must be >= 0");
  return {space, "l1", [w](double gamma, const Eigen::VectorXd& x) { return prox_l1(w, gamma, x); }};
}

template <WSpace S>
ResolventFamily<S> quadratic_to_point_family(const S& space, typename S::Point anchor) {
  space.require(anchor);
  return {space, "quadratic_to_point",
          [space, anchor = std::move(anchor)](double gamma, const typename S::Point& x) {
            return jost_resolve(space, anchor, gamma, x);
          }};
}

/// Checks d(T_n y, T_m y) <= |g_n - g_m| / g_n * d(y, T_n y) for every sample
/// y and every ordered index pair, with slack 1e-10 * (1 + scale) where scale
/// is d(origin, y) + d(y, T_n y).
template <WSpace S>
AuditReport c1_audit(const ResolventFamily<S>& family, std::span<const double> gammas,
                     std::span<const typename S::Point> samples, std::uint64_t seed = 0) {
  AuditReport report("c1/" + family.name(), seed);
  const auto& space = family.space();
  const auto origin = space.origin();
  std::size_t index = 0;
  for (const auto& y : samples) {
    std::vector<typename S::Point> images;
    images.reserve(gammas.size());
    for (double g : gammas) images.push_back(family.resolve(g, y));
    for (std::size_t n = 0; n < gammas.size(); ++n) {
      const double dn = space.distance(y, images[n]);
      const double tol = 1e-10 * (1.0 + space.distance(origin, y) + dn);
      for (std::size_t m = 0; m < gammas.size(); ++m, ++index) {
        const double lhs = space.distance(images[n], images[m]);
        const double rhs = std::abs(gammas[n] - gammas[m]) / gammas[n] * dn;
        report.record_inequality("C1", index, lhs, rhs, tol);
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Fixed-point fixtures

enum class Provenance { analytic, numeric };

template <class Point>
struct FixedPointFixture {
  Point p;
  Provenance provenance = Provenance::analytic;
  double residual = 0.0;  // largest d(p, T p) over the certified maps
};

/// Throws FixtureError unless d(p, T p) <= 1e-10 * (1 + d(origin, p)) for every map.
template <WSpace S>
FixedPointFixture<typename S::Point> certify_fixture(const S& space, typename S::Point p,
                                                     std::span<const Map<S>> maps,
                                                     Provenance provenance = Provenance::analytic) {
  space.require(p);
  const double tol = 1e-10 * (1.0 + space.distance(space.origin(), p));
  double worst = 0.0;
  for (const auto& m : maps) {
    const double r = space.distance(p, m(p));
    worst = std::max(worst, r);
    if (!(r <= tol)) {
      throw FixtureError("fixture " + space.format(p) + " is not a fixed point of " + m.name() +
                         " (residual " + std::to_string(r) + ")");
    }
  }
  return {std::move(p), provenance, worst};
}

/// Krasnoselskii averaging x <- (x + T x) / 2 from `start` until the step drops
/// below `step_tol`. The result still has to pass certify_fixture.
template <WSpace S>
typename S::Point averaged_fixed_point(const Map<S>& map, typename S::Point start,
                                       double step_tol = 1e-13, std::size_t max_iter = 1'000'000) {
  const auto& space = map.space();
  auto x = std::move(start);
  for (std::size_t i = 0; i < max_iter; ++i) {
    auto next = space.combine(x, map(x), 0.5);
    const double step = space.distance(x, next);
    x = std::move(next);
    if (step < step_tol) return x;
  }
  throw FixtureError("averaged iteration for " + map.name() + " did not settle within " +
                     std::to_string(max_iter) + " steps");
}

}  // namespace halrate

#endif  // HALRATE_MAPS_HPP
