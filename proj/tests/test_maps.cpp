#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "halrate/maps.hpp"
#include "halrate/schedule.hpp"
#include "oracles.hpp"

using namespace halrate;
using Catch::Matchers::WithinAbs;

namespace {

Euclid::Point vec(std::initializer_list<double> xs) {
  Euclid::Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) p[i++] = x;
  return p;
}

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

oracle::Matrix to_rows(const Eigen::MatrixXd& a) {
  oracle::Matrix out(static_cast<std::size_t>(a.rows()), std::vector<double>(static_cast<std::size_t>(a.cols())));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[i][j] = a(i, j);
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Random symmetric PSD matrix B B^T, rank-deficient when `rank` < n.
Eigen::MatrixXd random_psd(Rng& rng, Eigen::Index n, Eigen::Index rank) {
  Eigen::MatrixXd b(n, rank);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < rank; ++j) b(i, j) = rng.uniform(-2.0, 2.0);
  Eigen::MatrixXd a = b * b.transpose();
  return 0.5 * (a + a.transpose());
}

std::vector<double> happa_gammas(std::size_t upto) {
  const auto s = Schedule::happa_prop9();
  std::vector<double> g;
  for (std::size_t n = 0; n <= upto; ++n) g.push_back(s.gamma(n));
  return g;
}

}  // namespace

TEST_CASE("basic maps", "[maps]") {
  const Euclid r1(1);
  CHECK(negation_map(r1)(vec({1}))[0] == -1.0);
  const Euclid r2(2);
  const auto c = constant_map(r2, vec({2, 0}));
  CHECK(c(vec({-7, 3})) == vec({2, 0}));
  CHECK(c(vec({0, 0})) == vec({2, 0}));
  const auto swap = ray_swap_map(Tripod{}, 0, 1);
  CHECK(swap(TripodPoint(0, 1.5)) == TripodPoint(1, 1.5));
  CHECK(swap(TripodPoint(2, 1.5)) == TripodPoint(2, 1.5));
  CHECK(rotation_map(r2, 90)(vec({1, 0})) == vec({0, 1}));
  CHECK_THROWS_AS(rotation_map(r1, 90), InputError);
  CHECK_THROWS_AS(ray_swap_map(Tripod{}, 1, 1), InputError);
}

TEST_CASE("contraction toward a centre", "[maps]") {
  const Euclid r1(1);
  const auto f = contraction_toward(r1, vec({0}), 0.5);
  CHECK(f(vec({4}))[0] == 2.0);
  CHECK(f.lipschitz() == 0.5);
  CHECK(f.is_contraction());
  CHECK_THROWS_AS(contraction_toward(r1, vec({0}), 1.0), InputError);
  const auto g = contraction_toward(Tripod{}, TripodPoint(1, 2.0), 0.25);
  CHECK(g(TripodPoint(1, 2.0)) == TripodPoint(1, 2.0));
}

TEST_CASE("lipschitz audit of an isometry reports ratio 1", "[maps][lipschitz]") {
  const auto r = lipschitz_audit(negation_map(Euclid(1)), 50, 1);
  CHECK(r.passed());
  CHECK_THAT(r.worst_ratio, WithinAbs(1.0, 1e-12));
}

TEST_CASE("lipschitz audit of x/2 declared 0.5 reports ratio 0.5", "[maps][lipschitz]") {
  const auto r = lipschitz_audit(contraction_toward(Euclid(1), vec({0}), 0.5), 50, 1);
  CHECK(r.passed());
  CHECK_THAT(r.worst_ratio, WithinAbs(0.5, 1e-12));
}

TEST_CASE("lipschitz audit of 0.9x declared 0.5 fails with a witness", "[maps][lipschitz]") {
  const Euclid r1(1);
  const auto lying = linear_map(r1, mat({{0.9}}), MapKind::contraction, 0.5, "0.9x");
  const auto pairs = make_pairs(r1, 50, 1);
  const auto r = lipschitz_audit(lying, std::span<const PointPair<Euclid::Point>>(pairs), 1);
  CHECK_FALSE(r.passed());
  REQUIRE_FALSE(r.audit.violations.empty());
  const auto& [x, y] = pairs[r.audit.violations.front().index];
  CHECK(r1.distance(lying(x), lying(y)) > 0.5 * r1.distance(x, y));
  CHECK_THAT(r.worst_ratio, WithinAbs(0.9, 1e-12));
}

TEST_CASE("resolve_linear examples", "[maps][resolvent]") {
  const auto y = resolve_linear(mat({{1, 0}, {0, 2}}), 1.0, vec({2, 3}));
  CHECK_THAT(y[0], WithinAbs(1.0, 1e-15));
  CHECK_THAT(y[1], WithinAbs(1.0, 1e-15));

  const auto x = vec({0.3, -4});
  CHECK(resolve_linear(Eigen::MatrixXd::Zero(2, 2), 7.5, x) == x);

  const auto a = mat({{2, 1}, {1, 2}});
  const auto z = resolve_linear(a, 0.5, vec({1, 0}));
  const auto ref = oracle::shifted_solve(to_rows(a), 0.5, {1.0, 0.0});
  CHECK_THAT(z[0], WithinAbs(ref[0], 1e-12));
  CHECK_THAT(z[1], WithinAbs(ref[1], 1e-12));
  CHECK((z + 0.5 * a * z - vec({1, 0})).norm() <= 1e-12);
}

TEST_CASE("resolve_linear rejects bad operators", "[maps][resolvent][errors]") {
  CHECK_THROWS_AS(resolve_linear(mat({{1, 2}, {0, 1}}), 1.0, vec({1, 1})), InputError);
  CHECK_THROWS_AS(resolve_linear(mat({{1, 0}, {0, -1}}), 1.0, vec({1, 1})), InputError);
  CHECK_THROWS_AS(resolve_linear(mat({{1}}), 0.0, vec({1})), InputError);
  CHECK_THROWS_AS(resolve_linear(mat({{1}}), 1.0, vec({1, 2})), InputError);
  CHECK_THROWS_AS(linear_psd_family(Euclid(2), mat({{1}})), InputError);
}

TEST_CASE("prox_l1 examples", "[maps][resolvent]") {
  // against golden-section minimisation of gamma|y| + (y - 3)^2 / 2
  const double g = oracle::golden_section([](double y) { return std::abs(y) + 0.5 * (y - 3) * (y - 3); }, -5, 5);
  CHECK_THAT(prox_l1(1.0, 1.0, vec({3}))[0], WithinAbs(2.0, 0.0));
  CHECK_THAT(g, WithinAbs(2.0, 1e-6));

  const auto x = vec({1.5, -2, 0});
  CHECK(prox_l1(0.0, 3.0, x) == x);

  const auto z = prox_l1(1.0, 2.0, vec({1, -1}));
  CHECK(z == vec({0, 0}));
  for (double xi : {1.0, -1.0}) {
    const double m = oracle::golden_section([xi](double y) { return 2 * std::abs(y) + 0.5 * (y - xi) * (y - xi); }, -5, 5);
    CHECK_THAT(m, WithinAbs(0.0, 1e-6));
  }
  CHECK_THROWS_AS(prox_l1(-1.0, 1.0, x), InputError);
}

TEST_CASE("jost resolvent examples", "[maps][resolvent]") {
  const Euclid r1(1);
  for (double g : {0.1, 1.0, 3.0, 100.0}) CHECK(jost_resolve(r1, vec({2.5}), g, vec({2.5})) == vec({2.5}));

  // argmin_y y^2/2 + (y - 2)^2/2
  const double m = oracle::golden_section([](double y) { return 0.5 * y * y + 0.5 * (y - 2) * (y - 2); }, -10, 10);
  CHECK_THAT(m, WithinAbs(1.0, 1e-6));
  CHECK_THAT(jost_resolve(r1, vec({0}), 1.0, vec({2}))[0], WithinAbs(1.0, 1e-15));

  // tripod: scan the geodesic from x = (ray 0, 1) to a = (ray 1, 1)
  const Tripod t;
  const oracle::TreePoint x{0, 1};
  const oracle::TreePoint a{1, 1};
  const auto objective = [&](double s) {
    const auto y = oracle::walk_geodesic(x, a, s * oracle::tree_distance(x, a));
    const double da = oracle::tree_distance(y, a);
    const double dx = oracle::tree_distance(y, x);
    return 0.5 * da * da + 0.5 * dx * dx;
  };
  const double s = oracle::golden_section(objective, 0.0, 1.0);
  CHECK_THAT(s, WithinAbs(0.5, 1e-6));
  CHECK(jost_resolve(t, TripodPoint(1, 1), 1.0, TripodPoint(0, 1)).is_origin());
  CHECK_THROWS_AS(jost_resolve(t, TripodPoint(1, 1), -1.0, TripodPoint(0, 1)), InputError);
}

TEST_CASE("property: jost resolvent matches the argmin oracle", "[maps][resolvent][property]") {
  const Tripod t;
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    const auto x = t.sample(rng, 5.0);
    const auto a = t.sample(rng, 5.0);
    const double g = rng.uniform(0.05, 5.0);
    const oracle::TreePoint ox{x.ray(), x.t()};
    const oracle::TreePoint oa{a.ray(), a.t()};
    const double len = oracle::tree_distance(ox, oa);
    // The minimiser lies on [x, a]; minimise over arc length.
    const double s = oracle::golden_section(
        [&](double arc) {
          const auto y = oracle::walk_geodesic(ox, oa, arc);
          const double da = oracle::tree_distance(y, oa);
          const double dx = oracle::tree_distance(y, ox);
          return 0.5 * da * da + dx * dx / (2 * g);
        },
        0.0, len);
    const auto expected = oracle::walk_geodesic(ox, oa, s);
    const auto y = jost_resolve(t, a, g, x);
    CHECK(oracle::tree_distance({y.ray(), y.t()}, expected) <= 1e-5 * (1 + len));
    CHECK(jost_resolve(t, a, g, a) == a);
  }
}

TEST_CASE("property: prox_l1 and resolve_linear match their oracles", "[maps][resolvent][property]") {
  Rng rng(123);
  for (int i = 0; i < 50; ++i) {
    const double w = rng.uniform(0.0, 3.0);
    const double g = rng.uniform(0.01, 4.0);
    Euclid::Point x(3);
    for (Eigen::Index j = 0; j < 3; ++j) x[j] = rng.uniform(-10.0, 10.0);
    const auto y = prox_l1(w, g, x);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK_THAT(y[j], WithinAbs(oracle::soft_threshold_min(w, g, x[j]), 1e-8));

    const auto n = static_cast<Eigen::Index>(rng.integer(1, 5));
    const auto a = random_psd(rng, n, static_cast<Eigen::Index>(rng.integer(1, static_cast<long long>(n))));
    Eigen::VectorXd v(n);
    for (Eigen::Index j = 0; j < n; ++j) v[j] = rng.uniform(-10.0, 10.0);
    const auto z = resolve_linear(a, g, v);
    const auto ref = oracle::shifted_solve(to_rows(a), g, to_std(v));
    for (Eigen::Index j = 0; j < n; ++j) CHECK_THAT(z[j], WithinAbs(ref[static_cast<std::size_t>(j)], 1e-8));
  }
}

TEST_CASE("property: linear resolvents are firmly nonexpansive towards zeros", "[maps][resolvent][property]") {
  Rng rng(321);
  for (int i = 0; i < 40; ++i) {
    const Eigen::Index n = 3;
    const auto rank = static_cast<Eigen::Index>(rng.integer(1, 3));
    const auto a = random_psd(rng, n, rank);
    // A zero of A: a kernel vector (the origin when A is nonsingular).
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    if (eig.eigenvalues()[0] < 1e-9) p = 3.0 * eig.eigenvectors().col(0);
    REQUIRE((a * p).norm() <= 1e-8);
    const double g = rng.uniform(0.1, 5.0);
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd x(n);
      for (Eigen::Index j = 0; j < n; ++j) x[j] = rng.uniform(-10.0, 10.0);
      const auto j = resolve_linear(a, g, x);
      CHECK((x - j).dot(j - p) >= -1e-10 * (1 + x.squaredNorm()));
    }
  }
}

TEST_CASE("property: every family member is nonexpansive", "[maps][resolvent][property]") {
  const Euclid r2(2);
  const Euclid r3(3);
  const auto gammas = happa_gammas(10);
  const auto psd = linear_psd_family(r2, mat({{2, 1}, {1, 2}}));
  const auto l1 = l1_family(r3, 1.0);
  const auto quad = quadratic_to_point_family(Tripod{}, TripodPoint(1, 2.0));
  for (double g : gammas) {
    CHECK(lipschitz_audit(psd.member(g), 100, 5).passed());
    CHECK(lipschitz_audit(l1.member(g), 100, 5).passed());
    CHECK(lipschitz_audit(quad.member(g), 100, 5).passed());
  }
}

TEST_CASE("C1 audit: identical indices are trivially fine", "[maps][c1]") {
  const auto fam = linear_psd_family(Euclid(1), mat({{1}}));
  const std::vector<double> g{1.7};
  const std::vector<Euclid::Point> ys{vec({-2}), vec({5})};
  const auto r = c1_audit(fam, std::span<const double>(g), std::span<const Euclid::Point>(ys));
  CHECK(r.passed());
  CHECK(r.checked == 2);
  CHECK(r.worst_slack == 0.0);
}

TEST_CASE("C1 audit for the identity operator against closed forms", "[maps][c1]") {
  const auto fam = linear_psd_family(Euclid(1), mat({{1}}));
  const auto gammas = happa_gammas(10);
  const std::vector<Euclid::Point> ys{vec({-2}), vec({1}), vec({5})};
  CHECK(c1_audit(fam, std::span<const double>(gammas), std::span<const Euclid::Point>(ys)).passed());
  // Independent evaluation with J_g(y) = y / (1 + g).
  for (const auto& yv : ys) {
    const double y = yv[0];
    for (double gn : gammas) {
      for (double gm : gammas) {
        const double lhs = std::abs(y / (1 + gn) - y / (1 + gm));
        const double rhs = std::abs(gn - gm) / gn * std::abs(y - y / (1 + gn));
        CHECK(lhs <= rhs + 1e-15);
      }
    }
  }
}

TEST_CASE("C1 audit passes for all three family sources", "[maps][c1][property]") {
  const auto gammas = happa_gammas(10);
  const std::span<const double> gs(gammas);
  Rng rng(9);
  std::vector<TripodPoint> tp;
  std::vector<Euclid::Point> e2;
  std::vector<Euclid::Point> e3;
  for (int i = 0; i < 20; ++i) {
    tp.push_back(Tripod{}.sample(rng, 10.0));
    e2.push_back(Euclid(2).sample(rng, 10.0));
    e3.push_back(Euclid(3).sample(rng, 10.0));
  }
  CHECK(c1_audit(quadratic_to_point_family(Tripod{}, TripodPoint(2, 1.0)), gs, std::span<const TripodPoint>(tp)).passed());
  CHECK(c1_audit(linear_psd_family(Euclid(2), mat({{2, 1}, {1, 2}})), gs, std::span<const Euclid::Point>(e2)).passed());
  CHECK(c1_audit(l1_family(Euclid(3), 1.0), gs, std::span<const Euclid::Point>(e3)).passed());
}

TEST_CASE("C1 audit flags a family with an inconsistent scale", "[maps][c1]") {
  // T_g y = y / (1 + g^3) is not compatible with the gamma weights.
  const ResolventFamily<Euclid> bad(Euclid(1), "cubic", [](double g, const Euclid::Point& y) -> Euclid::Point {
    return y / (1.0 + g * g * g);
  });
  const std::vector<double> gammas{1.0, 1.1};
  const std::vector<Euclid::Point> ys{vec({4})};
  CHECK_FALSE(c1_audit(bad, std::span<const double>(gammas), std::span<const Euclid::Point>(ys)).passed());
}

TEST_CASE("fixture certification", "[maps][fixtures]") {
  const Euclid r2(2);
  const std::vector<Map<Euclid>> maps{rotation_map(r2, 90)};
  const std::span<const Map<Euclid>> ms(maps);
  CHECK(certify_fixture(r2, vec({0, 0}), ms).residual == 0.0);
  CHECK_THROWS_AS(certify_fixture(r2, vec({1, 0}), ms), FixtureError);

  const auto p = averaged_fixed_point(maps.front(), vec({3, -4}));
  const auto fx = certify_fixture(r2, p, ms, Provenance::numeric);
  CHECK(fx.provenance == Provenance::numeric);
  CHECK(r2.distance(p, vec({0, 0})) <= 1e-10);

  const auto l1 = l1_family(Euclid(3), 1.0).member(1.5);
  const auto q = averaged_fixed_point(l1, vec({4, -2, 7}));
  CHECK(q.norm() <= 1e-12);
}
