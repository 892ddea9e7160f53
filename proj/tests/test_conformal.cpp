#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "aegeo/catalog.hpp"
#include "aegeo/charges.hpp"
#include "aegeo/conformal.hpp"
#include "aegeo/curvature.hpp"
#include "support.hpp"

using namespace aegeo;

namespace {

const Chart ball = Chart::punctured_ball("ybar", ChartKind::normal_ybar, 1.0, 1.0 / 128.0);

}  // namespace

TEST_CASE("compactify") {
  SUBCASE("flat") {
    CompactificationResult c = compactify(make_catalog_metric(Family::euclidean, {}));
    // Where the compactifying factor is 1/|z|.
    for (const Vec3& x : oracle::random_points(10, 1.0 / 128.0, 1.0 / c.R1)) CHECK((c.g_hat(x) - Mat3::Identity()).norm() < 1e-12);
    // On the core it is constant, so g_hat is |x|^-4 delta / R0^4 there.
    for (const Vec3& x : oracle::random_points(5, 1.0 / c.R0, 0.9))
      CHECK((c.g_hat(x) - std::pow(c.R0 * x.norm(), -4) * Mat3::Identity()).norm() < 1e-12);
    CHECK(c.pinf_defect < 1e-12);
  }
  SUBCASE("conformally flat family near p_inf") {
    const double C = 0.5;
    CompactifyOptions opt;
    opt.check_cotton = true;
    CompactificationResult c = compactify(make_catalog_metric(Family::conformally_flat_ae, {C}), opt);
    for (const Vec3& x : oracle::random_points(5, 0.01, 0.9 / c.R1)) {
      double s = x.norm();
      double u = 1.0 + C / std::sqrt(1.0 + 1.0 / (s * s));
      CHECK((c.g_hat(x) - std::pow(u, 4) * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK(c.cotton_checked);
    CHECK(c.cotton.admissible);
    CHECK((c.g_hat_at_pinf - Mat3::Identity()).norm() < 1e-6);
  }
}

TEST_CASE("decompactify") {
  SUBCASE("flat") {
    Decompactification d = decompactify(make_metric(ball, Euclidean{}), dyadic_radii(2, 5));
    for (const Vec3& z : oracle::random_points(10, 1.5, 100.0)) CHECK((d.gamma(z) - Mat3::Identity()).norm() < 1e-12);
    CHECK(d.remainder.vanishing);
  }
  SUBCASE("normal form perturbation") {
    auto f = [](const auto& y) {
      using S = std::decay_t<decltype(y[0])>;
      return scaled_identity(S(1.0 + 0.3 * (y[0] * y[0] + y[1] * y[1] + y[2] * y[2])));
    };
    Decompactification d = decompactify(make_metric(ball, f), dyadic_radii(2, 5));
    CHECK(d.remainder.exponent >= 1.9);
  }
  SUBCASE("flat round trip") {
    CompactificationResult c = compactify(make_catalog_metric(Family::euclidean, {}));
    MetricField gh = c.g_hat;
    gh.chart = ball;
    Decompactification d = decompactify(gh);
    for (const Vec3& z : oracle::random_points(10, 1.5, 100.0)) CHECK((d.gamma(z) - Mat3::Identity()).norm() < 1e-12);
  }
}

TEST_CASE("conformal factor fit") {
  std::vector<double> radii = geometric_radii(8.0, 128.0, 12);
  SUBCASE("g = gamma") {
    MetricField g = make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 0.0});
    ConformalExpansion e = fit_conformal_factor(g, g, radii);
    CHECK(std::abs(e.C) < 1e-12);
    for (double v : e.u_minus_one) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("conformally flat family over delta") {
    MetricField g = make_catalog_metric(Family::conformally_flat_ae, {0.5});
    ConformalExpansion e = fit_conformal_factor(g, make_catalog_metric(Family::euclidean, {}), radii);
    CHECK(std::abs(e.C - 0.5) <= 1e-4);
    CHECK(std::abs(e.alpha - 1.0) <= 0.05);
    CHECK(e.traceless_defect < 1e-12);
  }
  SUBCASE("planted two-term factor") {
    ConformalExpansion e = fit_conformal_factor([](const Vec3& z) { return oracle::planted_u(z.norm()); }, radii);
    CHECK(std::abs(e.C - 0.3) <= 2e-3);
    CHECK(e.alpha >= 0.3);
    CHECK(e.alpha <= 0.5);
  }
}

TEST_CASE("mass constant") {
  SUBCASE("flat") {
    MetricField d = make_catalog_metric(Family::euclidean, {});
    MassResult m = mass_constant(d, d, make_scalar(d.chart, [](const auto&) { return 1.0; }));
    CHECK(std::abs(m.C) < 1e-12);
  }
  SUBCASE("conformally flat family against the divergence theorem") {
    const double C0 = 0.5;
    Chart wide = Chart::annulus("z", ChartKind::asymptotic_z, 1.0, 256.0);
    MetricField g = make_catalog_metric(Family::conformally_flat_ae, {C0}, wide);
    MetricField d = make_metric(wide, Euclidean{});
    ScalarField u = make_scalar(wide, [C0](const auto& z) { return 1.0 + C0 / sigma(z); });
    MassOptions opt;
    opt.truncation = 200.0;
    MassResult m = mass_constant(g, d, u, opt);
    CHECK(std::abs(m.C_truncated - oracle::cf_mass_truncated(C0, 200.0)) <= 1e-6);
    CHECK(std::abs(m.C - C0) <= 1e-3);
    CHECK(m.tail_convergent);
    AdmCharges e = adm_energy(g, dyadic_radii(4, 7));
    CHECK(std::abs(e.energy - 2.0 * m.C) <= 1e-2);
    ConformalExpansion f = fit_conformal_factor(g, d, geometric_radii(8.0, 200.0, 12));
    CHECK(std::abs(f.C - m.C) <= std::max(1e-3, m.tail_estimate));
  }
}

TEST_CASE("main expansion: flat") {
  MainExpansion out = run_main_expansion(make_catalog_metric(Family::euclidean, {}));
  CHECK(out.ok);
  CHECK(std::abs(out.expansion.C) < 1e-10);
  for (const Vec3& z : oracle::random_points(5, 10.0, 100.0)) {
    CHECK((out.zbar_map(z) - z).norm() <= 1e-10 * z.norm());
    CHECK((out.gamma(z) - Mat3::Identity()).norm() <= 1e-12);
  }
  CHECK(out.map_class.compatible);
}

TEST_CASE("main expansion: conformally flat family") {
  MainExpansion out = run_main_expansion(make_catalog_metric(Family::conformally_flat_ae, {0.5}));
  REQUIRE(out.ok);
  CHECK(std::abs(out.expansion.C - 0.5) <= 2e-3);
  CHECK(std::abs(out.trace_coefficient - 2.0) <= 0.02);
  CHECK(out.expansion.remainder_exponent >= 1.05);
  CHECK(out.map_class.compatible);
  CHECK(std::abs(out.mass.C - 0.5) <= 1e-3);
  CHECK(std::abs(out.expansion.energy_cross) <= 1e-2);
  for (const auto& s : out.stages) CHECK(s.status == "ok");
}

TEST_CASE("main expansion: schwarzschildian with anisotropic remainder") {
  MainExpansion out = run_main_expansion(make_catalog_metric(Family::first_order_schwarzschildian, {1.0, 0.1}));
  REQUIRE(out.ok);
  CHECK(std::abs(out.trace_coefficient - 1.0) <= 0.05);
  CHECK(std::abs(out.charges.energy - 0.5) <= 1e-3);
}
