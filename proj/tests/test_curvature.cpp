#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "aegeo/asymptotics.hpp"
#include "aegeo/catalog.hpp"
#include "aegeo/curvature.hpp"
#include "support.hpp"

using namespace aegeo;

namespace {

double cotton_sup(const PointCurvature& c) {
  double s = 0.0;
  for (const Mat3& m : c.cotton) s = std::max(s, m.cwiseAbs().maxCoeff());
  return s;
}

double cotton_norm(const MetricField& g, const Vec3& p) {
  PointCurvature c = curvature_at(g, p);
  double s = 0.0;
  for (const Mat3& m : c.cotton) s += m.squaredNorm();
  return std::sqrt(s);
}

const std::vector<double> radii_10_100 = {10, 15, 22, 33, 47, 68, 100};

}  // namespace

TEST_CASE("flat space has no curvature") {
  MetricField g = make_catalog_metric(Family::euclidean, {});
  CurvatureBundle b = curvature_bundle(g, g.chart.nodes());
  CHECK(b.gamma.components.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.riemann.components.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.scalar.components.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.cotton.components.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("schwarzschildian christoffel symbols at |z| = 50") {
  const double A = 1.0;
  MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {A, 0.0});
  for (const Vec3& dir : {Vec3(1, 0, 0), Vec3(0.6, 0.8, 0), Vec3(1, 1, 1).normalized()}) {
    Vec3 z = 50.0 * dir;
    double r = z.norm();
    Christoffel G = christoffel_at(g, z);
    double err = 0.0, ref_max = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double ref = 0.5 * A * (-(a == l) * z[k] - (a == k) * z[l] + (k == l) * z[a]) / std::pow(r, 3);
          err = std::max(err, std::abs(G[a](k, l) - ref));
          ref_max = std::max(ref_max, std::abs(ref));
        }
    CHECK(err / ref_max <= 3.0 / r);
  }
}

TEST_CASE("christoffel symbols of psi^4 delta") {
  oracle::GaussianConformal f{0.1};
  Chart box = Chart::annulus("x", ChartKind::harmonic_y, 0.1, 2.0);
  MetricField g = make_metric(box, f);
  for (const Vec3& p : oracle::random_points(5, 0.2, 1.5)) {
    double psi = f.psi(p);
    Vec3 dlnpsi = -2.0 * 0.1 * std::exp(-p.squaredNorm()) * p / psi;
    auto ref = oracle::conformal_christoffel(dlnpsi);
    Christoffel G = christoffel_at(g, p);
    for (int k = 0; k < 3; ++k) CHECK((G[k] - ref[k]).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("leading ricci of the schwarzschildian metric") {
  MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 0.0});
  SphereRule s(8);
  for (double r : radii_10_100)
    for (Eigen::Index q = 0; q < s.size(); ++q) {
      Vec3 z = r * s.dirs.col(q);
      Mat3 ref = oracle::schwarzschild_ricci(1.0, z);
      Mat3 ric = curvature_at(g, z).ricci;
      CHECK((ric - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff() <= 5.0 / r);
    }
}

TEST_CASE("scalar curvature decay of the schwarzschildian metric") {
  MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 0.0});
  DecayFit f = decay_fit([&](const Vec3& p) { return std::abs(scalar_curvature_at(g, p)); }, radii_10_100,
                         SphereRule(8));
  CHECK(f.exponent >= 3.7);
  DecayFit ric = decay_fit([&](const Vec3& p) { return curvature_at(g, p).ricci.norm(); }, radii_10_100,
                           SphereRule(8));
  CHECK(ric.exponent >= 2.8);
  CHECK(ric.exponent <= 3.2);
}

TEST_CASE("cotton tensor") {
  SUBCASE("conformally flat metrics") {
    for (Family f : {Family::euclidean, Family::conformally_flat_ae}) {
      MetricField g = make_catalog_metric(f, f == Family::euclidean ? std::vector<double>{} : std::vector<double>{0.5});
      for (const Vec3& p : oracle::random_points(10, 1.0, 100.0)) CHECK(cotton_sup(curvature_at(g, p)) <= 1e-8);
    }
    MetricField gs = make_metric(Chart::annulus("x", ChartKind::harmonic_y, 0.1, 2.0), oracle::GaussianConformal{0.3});
    for (const Vec3& p : oracle::random_points(10, 0.2, 1.5)) CHECK(cotton_sup(curvature_at(gs, p)) <= 1e-8);
  }
  SUBCASE("decay with an O(r^-2) anisotropic remainder") {
    MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 1.0});
    DecayFit f = decay_fit([&](const Vec3& p) { return cotton_norm(g, p); }, radii_10_100, SphereRule(8));
    CHECK(f.exponent >= 4.6);
    CHECK(f.exponent <= 5.4);
  }
  SUBCASE("trace vanishes") {
    MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 1.0});
    PointCurvature c = curvature_at(g, Vec3(3, -2, 4));
    Mat3 ginv = c.g.inverse();
    for (int k = 0; k < 3; ++k) {
      double tr = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) tr += ginv(i, j) * c.cotton[i](j, k);
      CHECK(std::abs(tr) <= 1e-10 * cotton_sup(c));
    }
  }
}

TEST_CASE("cotton is conformally invariant") {
  Chart z = Chart::annulus("z", ChartKind::asymptotic_z, 1.0, 128.0);
  std::vector<MetricField> metrics = {make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 1.0}),
                                      make_metric(z, oracle::PlantedCotton{5.0, 0.3}),
                                      make_metric(z, oracle::PlantedCotton{4.0, 0.2})};
  std::vector<ScalarField> factors = {
      make_scalar(z, [](const auto& p) { return 1.0 + 0.5 / sigma(p); }),
      make_scalar(z, [](const auto& p) {
        using std::exp;
        return 1.0 + 0.2 * exp(-p[0] * p[0] / 50.0);
      }),
      make_scalar(z, [](const auto& p) {
        using std::cos;
        return 2.0 + 0.3 * cos(0.2 * p[1]) / sigma(p);
      })};
  for (const MetricField& g : metrics)
    for (const ScalarField& u : factors) {
      MetricField h = conformal(g, u);
      for (const Vec3& p : oracle::random_points(6, 2.0, 20.0, 3)) {
        PointCurvature a = curvature_at(g, p), b = curvature_at(h, p);
        double diff = 0.0;
        for (int i = 0; i < 3; ++i) diff = std::max(diff, (a.cotton[i] - b.cotton[i]).cwiseAbs().maxCoeff());
        CHECK(diff <= 1e-6 * cotton_sup(a));
      }
    }
}

TEST_CASE("conformal scalar curvature") {
  MetricField d = make_catalog_metric(Family::euclidean, {});
  ScalarField one = make_scalar(d.chart, [](const auto&) { return 1.0; });
  Points pts(3, 2);
  pts.col(0) = Vec3(2, 3, 1);
  pts.col(1) = Vec3(0, 0, 0);
  CHECK(conformal_scalar(d, one, pts).cwiseAbs().maxCoeff() == 0.0);

  const double C = 0.5;
  ScalarField u = make_scalar(d.chart, [C](const auto& p) { return 1.0 + C / sigma(p); });
  Eigen::VectorXd R = conformal_scalar(d, u, pts);
  CHECK(std::abs(R[1] - 24.0 * C * std::pow(1.0 + C, -5.0)) < 1e-12);

  // Against the curvature of u^4 delta: exact on jets, second order on finite differences.
  MetricField g = conformal(d, u);
  CHECK(std::abs(R[0] - scalar_curvature_at(g, pts.col(0))) < 1e-12);
  double e1 = std::abs(R[0] - scalar_curvature_at(fd_view(g, 0.1), pts.col(0)));
  double e2 = std::abs(R[0] - scalar_curvature_at(fd_view(g, 0.05), pts.col(0)));
  CHECK(e1 / e2 > 3.4);
  CHECK(e1 / e2 < 4.6);
}

TEST_CASE("schur residual") {
  MetricField d = make_catalog_metric(Family::euclidean, {});
  CHECK(schur_residual(d, shell_nodes({2, 4, 8}, SphereRule(6))) <= 1e-12);

  MetricField t = make_catalog_metric(Family::torus_conformal, {0.1});
  CHECK(schur_residual(t, t.chart.nodes()) <= 1e-6);

  MetricField g = make_catalog_metric(Family::conformally_flat_ae, {0.5});
  Points nodes = shell_nodes({5, 10, 20}, SphereRule(6));
  double r1 = schur_residual(g, nodes, 0.4), r2 = schur_residual(g, nodes, 0.2);
  CHECK(schur_residual(g, nodes) <= 1e-12);
  CHECK(r1 / r2 >= 3.4);
  CHECK(r1 / r2 <= 4.6);
}
