#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "aegeo/asymptotics.hpp"
#include "aegeo/catalog.hpp"
#include "support.hpp"

using namespace aegeo;

namespace {

const Chart zchart = Chart::annulus("z", ChartKind::asymptotic_z, 1.0, 128.0);
const Chart xchart = Chart::punctured_ball("x", ChartKind::inverted_x, 1.0, 1.0 / 128.0);

}  // namespace

TEST_CASE("euclidean is delta everywhere") {
  MetricField g = make_catalog_metric(Family::euclidean, {});
  for (const Vec3& p : oracle::random_points(20, 1.0, 128.0)) CHECK(g(p) == Mat3::Identity());
}

TEST_CASE("schwarzschildian family by substitution") {
  MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {2.0, 0.0});
  Mat3 m = g(Vec3(10.0, 0.0, 0.0));
  CHECK((m - (1.0 + 2.0 / std::sqrt(101.0)) * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("conformally flat family has 1 + 4C/r leading term") {
  MetricField g = make_catalog_metric(Family::conformally_flat_ae, {0.5});
  for (double r : {1e3, 1e4, 1e5}) {
    Mat3 m = g(Vec3(0.0, r * 0.6, r * 0.8));
    // (1 + C/sigma)^4 = 1 + 4C/sigma + 6C^2/sigma^2 + ...
    CHECK(std::abs(m(0, 0) - (1.0 + 2.0 / r)) <= 2.0 / (r * r));
    CHECK(std::abs(m(0, 1)) == 0.0);
  }
}

TEST_CASE("hand evaluation at (3,4,0)") {
  MetricField g = make_catalog_metric(Family::conformally_flat_ae, {0.5});
  double u = 1.0 + 0.5 / std::sqrt(26.0);
  CHECK((g(Vec3(3, 4, 0)) - std::pow(u, 4) * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("bad parameters are rejected") {
  CHECK_THROWS_AS(make_catalog_metric(Family::conformally_flat_ae, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_catalog_metric(Family::conformally_flat_ae, {-1.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_catalog_metric("kerr", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_catalog_metric(Family::torus_conformal, {1.5}), std::invalid_argument);
  // Not positive definite on the chart.
  CHECK_THROWS_AS(make_catalog_metric(Family::first_order_schwarzschildian, {-4.0, 0.0}), std::domain_error);
}

TEST_CASE("pullback by the identity") {
  MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 0.3});
  MetricField h = pullback(g, identity_map(g.chart));
  for (const Vec3& p : oracle::random_points(5, 2.0, 100.0)) CHECK((h(p) - g(p)).norm() < 1e-15);
}

TEST_CASE("kelvin pullback of delta") {
  MetricField d = make_catalog_metric(Family::euclidean, {});
  MetricField h = pullback(d, kelvin_map(xchart, zchart));
  for (const Vec3& x : oracle::random_points(5, 0.01, 0.9)) {
    // J = (I - 2 x x^T / |x|^2) / |x|^2, J^T J = I / |x|^4.
    double r2 = x.squaredNorm();
    Mat3 J = (Mat3::Identity() - 2.0 * x * x.transpose() / r2) / r2;
    Mat3 ref = J.transpose() * J;
    CHECK((h(x) - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
    CHECK((h(x) - Mat3::Identity() / (r2 * r2)).cwiseAbs().maxCoeff() <= 1e-12 / (r2 * r2));
  }
}

TEST_CASE("kelvin pullback of the conformally flat family") {
  MetricField g = make_catalog_metric(Family::conformally_flat_ae, {0.5});
  MetricField h = pullback(g, kelvin_map(xchart, zchart));
  for (const Vec3& x : oracle::random_points(5, 0.01, 0.9, 11)) {
    double s = x.norm();
    double u = 1.0 + 0.5 / std::sqrt(1.0 + 1.0 / (s * s));
    Mat3 ref = std::pow(u, 4) * std::pow(s, -4) * Mat3::Identity();
    CHECK((h(x) - ref).cwiseAbs().maxCoeff() <= 1e-10 * ref(0, 0));
  }
}

TEST_CASE("kelvin is an involution") {
  CoordinateMap k = kelvin_map(zchart, xchart);
  CHECK(k(Vec3(2, 0, 0)).isApprox(Vec3(0.5, 0, 0), 1e-15));
  for (const Vec3& p : oracle::random_points(10, 1.0, 128.0)) CHECK((k(k(p)) - p).norm() <= 1e-12 * p.norm());
}

TEST_CASE("jets carry exact derivatives") {
  MetricField g = make_catalog_metric(Family::conformally_flat_ae, {0.5});
  Vec3 p(3.0, -1.0, 2.0);
  Mat3J m = g.jet(p);
  const double h = 1e-4;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Unit(a) * h;
    double fd = (g(p + e)(0, 0) - g(p - e)(0, 0)) / (2 * h);
    CHECK(std::abs(m(0, 0).d(a) - fd) < 1e-8);
    double fd2 = (g(p + e)(1, 1) - 2 * g(p)(1, 1) + g(p - e)(1, 1)) / (h * h);
    CHECK(std::abs(m(1, 1).d(a, a) - fd2) < 1e-5);
  }
}

TEST_CASE("compose and inverse") {
  auto f = make_map(
      zchart, zchart,
      [](const auto& z) {
        Vector3<std::decay_t<decltype(z[0])>> w = z;
        w[0] = w[0] + 0.1 * z[1] * z[1] / (1.0 + z[2] * z[2]);
        w[2] = w[2] + 0.05 * z[0];
        return w;
      },
      [](const auto& z) {
        using S = std::decay_t<decltype(z[0])>;
        Matrix3<S> j = scaled_identity(S(1.0));
        S d = 1.0 + z[2] * z[2];
        j(0, 1) = 0.2 * z[1] / d;
        j(0, 2) = -0.2 * z[1] * z[1] * z[2] / (d * d);
        j(2, 0) = S(0.05);
        return j;
      });
  CoordinateMap inv = inverse_map(f);
  CoordinateMap id = compose(inv, f);
  for (const Vec3& p : oracle::random_points(5, 1.0, 3.0)) {
    CHECK((id(p) - p).norm() < 1e-12);
    CHECK((id.jacobian(p) - Mat3::Identity()).norm() < 1e-10);
  }
}

TEST_CASE("grid sampled delta interpolates to delta") {
  MetricField d = make_catalog_metric(Family::euclidean, {});
  Lattice lat{Vec3(1.0, 1.0, 1.0), 0.5, {6, 6, 6}};
  MetricField s = sample_on_lattice(d, lat);
  for (const Vec3& p : {Vec3(1.3, 2.1, 1.7), Vec3(2.9, 1.05, 3.2)}) CHECK((s(p) - Mat3::Identity()).norm() < 1e-14);
}

TEST_CASE("evaluate outside the chart throws") {
  MetricField g = make_catalog_metric(Family::euclidean, {});
  Points pts(3, 1);
  pts.col(0) = Vec3(0.1, 0, 0);
  CHECK_THROWS(evaluate(g, pts));
}
