#ifndef HALRATE_SPACES_HPP
#define HALRATE_SPACES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "halrate/audit.hpp"
#include "halrate/error.hpp"
#include "halrate/random.hpp"

namespace halrate {

/// A convex-combination weight. Construction outside [0,1] is an input error.
class Coefficient {
 public:
  // Implicit so that call sites can pass plain doubles and still get the check.
  Coefficient(double lambda) : value_(lambda) {  // NOLINT(google-explicit-constructor)
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw InputError("convex coefficient must lie in [0,1], got " + std::to_string(lambda));
    }
  }

  double value() const { return value_; }

 private:
  double value_;
};

/// A W-hyperbolic space: a metric `distance` together with the abstract
/// convex combination `combine(p, q, l)`, read as (1-l)p + l q.
template <class S>
concept WSpace = requires(const S& s, const typename S::Point& p, Rng& rng) {
  { s.distance(p, p) } -> std::convertible_to<double>;
  { s.combine(p, p, Coefficient{0.5}) } -> std::same_as<typename S::Point>;
  { s.origin() } -> std::same_as<typename S::Point>;
  { s.sample(rng, 1.0) } -> std::same_as<typename S::Point>;
  { s.scalars() } -> std::convertible_to<std::size_t>;
  { s.format(p) } -> std::convertible_to<std::string>;
  s.require(p);
};

// ---------------------------------------------------------------------------
// Euclidean space R^n

class Euclid {
 public:
  using Point = Eigen::VectorXd;

  static constexpr bool kHilbert = true;
  static constexpr const char* kName = "euclid";

  explicit Euclid(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InputError("euclid dimension must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t scalars() const { return dim_; }

  void require(const Point& p) const {
    if (static_cast<std::size_t>(p.size()) != dim_) {
      throw InputError("point of dimension " + std::to_string(p.size()) +
                       " used in euclid space of dimension " + std::to_string(dim_));
    }
  }

  double distance(const Point& p, const Point& q) const {
    require(p);
    require(q);
    return (p - q).norm();
  }

  Point combine(const Point& p, const Point& q, Coefficient lambda) const {
    require(p);
    require(q);
    const double l = lambda.value();
    if (l == 0.0 || p == q) return p;
    if (l == 1.0) return q;
    return (1.0 - l) * p + l * q;
  }

  Point origin() const { return Point::Zero(static_cast<Eigen::Index>(dim_)); }

  /// Uniform in the cube [-radius, radius]^dim.
  Point sample(Rng& rng, double radius) const {
    Point p(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = rng.uniform(-radius, radius);
    return p;
  }

  std::string format(const Point& p) const {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ']';
    return os.str();
  }

  /// Builds a point from raw coordinates.
  Point point(std::span<const double> coords) const {
    Point p(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) p[static_cast<Eigen::Index>(i)] = coords[i];
    require(p);
    return p;
  }

  std::vector<double> coordinates(const Point& p) const { return {p.data(), p.data() + p.size()}; }

 private:
  std::size_t dim_;
};

// ---------------------------------------------------------------------------
// Tripod: three copies of [0, inf) glued at 0. The simplest R-tree that is
// not a line; geodesics between different rays pass through the origin.

class TripodPoint {
 public:
  static constexpr int kRays = 3;

  TripodPoint() = default;

  TripodPoint(int ray, double t) : ray_(ray), t_(t) {
    if (ray < 0 || ray >= kRays) throw InputError("tripod ray must be 0, 1 or 2");
    if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("tripod coordinate must be finite and >= 0");
    if (t_ == 0.0) ray_ = 0;  // the glue point has a single representation
  }

  int ray() const { return ray_; }
  double t() const { return t_; }
  bool is_origin() const { return t_ == 0.0; }

  friend bool operator==(const TripodPoint&, const TripodPoint&) = default;

 private:
  int ray_ = 0;
  double t_ = 0.0;
};

class Tripod {
 public:
  using Point = TripodPoint;

  static constexpr bool kHilbert = false;
  static constexpr const char* kName = "tripod";

  std::size_t scalars() const { return 2; }

  void require(const Point&) const {}

  double distance(const Point& p, const Point& q) const {
    if (p.ray() == q.ray()) return std::abs(p.t() - q.t());
    return p.t() + q.t();
  }

  /// The point at arc length l * d(p,q) from p on the geodesic [p,q].
  Point combine(const Point& p, const Point& q, Coefficient lambda) const {
    const double l = lambda.value();
    if (l == 0.0 || p == q) return p;
    if (l == 1.0) return q;
    if (p.ray() == q.ray()) return Point(p.ray(), (1.0 - l) * p.t() + l * q.t());
    const double s = l * (p.t() + q.t());
    if (s <= p.t()) return Point(p.ray(), p.t() - s);
    return Point(q.ray(), s - p.t());
  }

  Point origin() const { return {}; }

  /// Random ray, with about one sample in ten placed exactly at the origin.
  Point sample(Rng& rng, double radius) const {
    const int ray = static_cast<int>(rng.integer(0, TripodPoint::kRays - 1));
    if (rng.bernoulli(0.1)) return {};
    return Point(ray, rng.uniform(0.0, radius));
  }

  std::string format(const Point& p) const {
    std::ostringstream os;
    os.precision(17);
    os << "(ray " << p.ray() << ", " << p.t() << ')';
    return os.str();
  }

  /// Builds a point from `[ray, t]`.
  Point point(std::span<const double> coords) const {
    if (coords.size() != 2) throw InputError("tripod point needs exactly [ray, t]");
    const double ray = coords[0];
    if (ray != std::floor(ray)) throw InputError("tripod ray index must be an integer");
    return Point(static_cast<int>(ray), coords[1]);
  }

  std::vector<double> coordinates(const Point& p) const { return {static_cast<double>(p.ray()), p.t()}; }

  /// Relabeling of two rays; an isometry fixing the third ray pointwise.
  static Point swap_rays(const Point& p, int a, int b) {
    if (p.is_origin()) return p;
    if (p.ray() == a) return Point(b, p.t());
    if (p.ray() == b) return Point(a, p.t());
    return p;
  }
};

// ---------------------------------------------------------------------------
// Axiom audit

template <class Point>
struct AxiomSample {
  Point x, y, z, w;
  double lambda = 0.0;
  double lambda_tilde = 0.0;
};

template <WSpace S>
std::vector<AxiomSample<typename S::Point>> make_axiom_samples(const S& space, std::size_t count,
                                                               std::uint64_t seed,
                                                               double radius = 10.0) {
  Rng rng(seed);
  std::vector<AxiomSample<typename S::Point>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    AxiomSample<typename S::Point> s{space.sample(rng, radius), space.sample(rng, radius),
                                     space.sample(rng, radius), space.sample(rng, radius)};
    // Endpoints are exercised explicitly now and then.
    const auto pick = [&rng] {
      const double r = rng.uniform();
      if (r < 0.05) return 0.0;
      if (r < 0.10) return 1.0;
      return rng.uniform();
    };
    s.lambda = pick();
    s.lambda_tilde = pick();
    out.push_back(std::move(s));
  }
  return out;
}

/// Evaluates (W1)-(W4) and the two derived identities/inequalities
///   d(x, (1-l)x + l y) = l d(x,y),   d(y, (1-l)x + l y) = (1-l) d(x,y),
///   d((1-l)x + l z, (1-l~)y + l~ w) <= (1-l)d(x,y) + l d(z,w) + |l - l~| d(y,w)
/// on every sample. Tolerance is 1e-12 * (1 + largest pairwise distance).
template <WSpace S>
AuditReport axiom_audit(const S& space, std::span<const AxiomSample<typename S::Point>> samples,
                        std::uint64_t seed = 0) {
  AuditReport report(std::string("axioms/") + S::kName, seed);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [x, y, z, w, l, lt] = samples[i];
    const std::array pts{&x, &y, &z, &w};
    double scale = 0.0;
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        scale = std::max(scale, space.distance(*pts[a], *pts[b]));
    const double tol = 1e-12 * (1.0 + scale);

    const auto d = [&space](const auto& p, const auto& q) { return space.distance(p, q); };
    const auto xy_l = space.combine(x, y, l);
    const auto xy_lt = space.combine(x, y, lt);

    report.record_inequality("W1", i, d(z, xy_l), (1 - l) * d(z, x) + l * d(z, y), tol);
    report.record_identity("W2", i, d(xy_l, xy_lt), std::abs(l - lt) * d(x, y), tol);
    report.record_identity("W3", i, d(xy_l, space.combine(y, x, 1.0 - l)), 0.0, tol);
    report.record_inequality("W4", i, d(xy_l, space.combine(z, w, l)),
                             (1 - l) * d(x, z) + l * d(y, w), tol);
    report.record_identity("geodesic-left", i, d(x, xy_l), l * d(x, y), tol);
    report.record_identity("geodesic-right", i, d(y, xy_l), (1 - l) * d(x, y), tol);
    report.record_inequality("mixed-weights", i, d(space.combine(x, z, l), space.combine(y, w, lt)),
                             (1 - l) * d(x, y) + l * d(z, w) + std::abs(l - lt) * d(y, w), tol);
  }
  return report;
}

/// Seeded convenience wrapper: `count` random samples, then the audit.
template <WSpace S>
AuditReport axiom_audit(const S& space, std::size_t count, std::uint64_t seed) {
  const auto samples = make_axiom_samples(space, count, seed);
  return axiom_audit(space, std::span<const AxiomSample<typename S::Point>>(samples), seed);
}

/// Metric axioms plus Gromov's four-point condition
///   d(x,y) + d(z,w) <= max(d(x,z) + d(y,w), d(x,w) + d(y,z)),
/// which characterises R-trees; euclidean spaces of dimension > 1 fail it.
template <WSpace S>
AuditReport metric_audit(const S& space, std::span<const AxiomSample<typename S::Point>> samples,
                         bool four_point) {
  AuditReport report(std::string("metric/") + S::kName);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [x, y, z, w, l, lt] = samples[i];
    const auto d = [&space](const auto& p, const auto& q) { return space.distance(p, q); };
    const double scale = std::max({d(x, y), d(x, z), d(y, z), d(x, w), d(y, w), d(z, w)});
    const double tol = 1e-12 * (1.0 + scale);
    report.record_identity("symmetry", i, d(x, y), d(y, x), tol);
    report.record_identity("self-distance", i, d(x, x), 0.0, tol);
    report.record_inequality("triangle", i, d(x, z), d(x, y) + d(y, z), tol);
    if (four_point) {
      report.record_inequality("four-point", i, d(x, y) + d(z, w),
                               std::max(d(x, z) + d(y, w), d(x, w) + d(y, z)), tol);
    }
  }
  return report;
}

}  // namespace halrate

#endif  // HALRATE_SPACES_HPP
