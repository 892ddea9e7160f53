#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "aegeo/asymptotics.hpp"
#include "aegeo/catalog.hpp"
#include "aegeo/curvature.hpp"
#include "aegeo/elliptic.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

using namespace aegeo;

namespace {

const Chart box_chart = Chart::annulus("x", ChartKind::harmonic_y, 1e-6, 10.0);

// Independent 7-point finite differences for d_i (psi^2 d_i u) = 0 with u = x^1 on the faces.
Eigen::VectorXd fd_oracle_solve(const oracle::GaussianConformal& f, const BoxGrid& grid) {
  const int n = grid.n;
  const double h = grid.h();
  std::vector<int> id(grid.size(), -1);
  int m = 0;
  for (Eigen::Index q = 0; q < grid.size(); ++q)
    if (!grid.boundary(q)) id[q] = m++;
  std::vector<Eigen::Triplet<double>> A;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  auto p2 = [&](const Vec3& x) { return std::pow(f.psi(x), 2); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Eigen::Index q = grid.index(i, j, k);
        if (id[q] < 0) continue;
        Vec3 x = grid.point(i, j, k);
        int ijk[3] = {i, j, k};
        for (int a = 0; a < 3; ++a)
          for (int s : {-1, 1}) {
            int nb[3] = {ijk[0], ijk[1], ijk[2]};
            nb[a] += s;
            Eigen::Index qn = grid.index(nb[0], nb[1], nb[2]);
            double w = p2(x + 0.5 * s * h * Vec3::Unit(a));
            A.emplace_back(id[q], id[q], -w);
            if (id[qn] >= 0)
              A.emplace_back(id[q], id[qn], w);
            else
              b[id[q]] -= w * grid.point(qn)[0];
          }
      }
  Eigen::SparseMatrix<double> S(m, m);
  S.setFromTriplets(A.begin(), A.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(S);
  Eigen::VectorXd x = lu.solve(b);
  Eigen::VectorXd u(grid.size());
  for (Eigen::Index q = 0; q < grid.size(); ++q) u[q] = id[q] >= 0 ? x[id[q]] : grid.point(q)[0];
  return u;
}

}  // namespace

TEST_CASE("pointwise Laplace-Beltrami") {
  MetricField d = make_metric(box_chart, Euclidean{});
  ScalarField r2 = make_scalar(box_chart, [](const auto& z) { return z[0] * z[0] + z[1] * z[1] + z[2] * z[2]; });
  ScalarField inv = make_scalar(box_chart, [](const auto& z) { return 1.0 / norm3(z); });
  for (const Vec3& p : oracle::random_points(5, 1.0, 5.0)) {
    CHECK(std::abs(laplacian_at(d, r2, p) - 6.0) < 1e-12);
    CHECK(std::abs(laplacian_at(d, inv, p)) < 1e-12);
  }
  // psi^4 delta: Delta_g u = psi^-4 (Delta u + d ln(psi^2) . du).
  oracle::GaussianConformal f{0.3};
  MetricField g = make_metric(box_chart, f);
  ScalarField u = make_scalar(box_chart, [](const auto& z) {
    using std::sin;
    return sin(z[0]) * z[1] + z[2] * z[2] * z[0];
  });
  for (const Vec3& p : oracle::random_points(5, 0.2, 1.5, 5)) {
    double psi = f.psi(p);
    Vec3 dlnpsi2 = -2.0 * 2.0 * 0.3 * std::exp(-p.squaredNorm()) * p / psi;
    Vec3 du(std::cos(p[0]) * p[1] + p[2] * p[2], std::sin(p[0]), 2.0 * p[2] * p[0]);
    double lap = -std::sin(p[0]) * p[1] + 2.0 * p[0];
    CHECK(std::abs(laplacian_at(g, u, p) - std::pow(psi, -4) * (lap + dlnpsi2.dot(du))) < 1e-12);
  }
}

TEST_CASE("discrete Laplace-Beltrami is second order") {
  MetricField d = make_metric(box_chart, Euclidean{});
  double err[2];
  for (int level = 0; level < 2; ++level) {
    BoxGrid grid = BoxGrid::box(level ? 33 : 17, Vec3(3.0, 0.0, 0.0), 1.0);
    Points pts = grid.points();
    Eigen::VectorXd u(grid.size());
    for (Eigen::Index q = 0; q < grid.size(); ++q) u[q] = 1.0 / pts.col(q).norm();
    Eigen::VectorXd lap = laplace_beltrami(d, grid, u);
    err[level] = lap.cwiseAbs().maxCoeff();
  }
  CHECK(err[0] / err[1] > 3.4);
  CHECK(err[0] / err[1] < 4.6);
}

TEST_CASE("dirichlet problems") {
  SUBCASE("constant data") {
    EllipticProblem pb;
    pb.metric = make_metric(box_chart, oracle::GaussianConformal{0.1});
    pb.grid = BoxGrid::box(9, Vec3::Zero(), 1.0);
    pb.boundary = [](const Vec3&) { return 1.0; };
    DirichletResult r = dirichlet_solve(pb);
    CHECK(r.converged);
    CHECK((r.u.array() - 1.0).abs().maxCoeff() < 1e-10);
  }
  SUBCASE("linear data on flat space") {
    EllipticProblem pb;
    pb.metric = make_metric(box_chart, Euclidean{});
    pb.grid = BoxGrid::box(13, Vec3::Zero(), 1.0);
    pb.boundary = [](const Vec3& x) { return x[0]; };
    DirichletResult r = dirichlet_solve(pb);
    Points pts = pb.grid.points();
    CHECK((r.u - pts.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("conformally flat bump") {
    oracle::GaussianConformal f{0.1};
    MetricField g = make_metric(box_chart, f);
    auto solve = [&](int n) {
      EllipticProblem pb;
      pb.metric = g;
      pb.grid = BoxGrid::box(n, Vec3::Zero(), 1.0);
      pb.boundary = [](const Vec3& x) { return x[0]; };
      return dirichlet_solve(pb);
    };
    DirichletResult r9 = solve(9), r17 = solve(17);
    CHECK(r9.residual <= 1e-8);
    CHECK(r17.residual <= 1e-8);

    // The same 9^3 system solved densely.
    BoxGrid coarse = BoxGrid::box(9, Vec3::Zero(), 1.0);
    DiscreteOperator op = assemble_operator(g, coarse);
    std::vector<Eigen::Index> in;
    for (Eigen::Index q = 0; q < coarse.size(); ++q)
      if (!coarse.boundary(q)) in.push_back(q);
    Eigen::MatrixXd K = Eigen::MatrixXd(op.K);
    Eigen::MatrixXd A(in.size(), in.size());
    Eigen::VectorXd b(in.size());
    Points pts = coarse.points();
    for (size_t a = 0; a < in.size(); ++a) {
      b[a] = 0.0;
      for (Eigen::Index q = 0; q < coarse.size(); ++q)
        if (coarse.boundary(q)) b[a] -= K(in[a], q) * pts(0, q);
      for (size_t c = 0; c < in.size(); ++c) A(a, c) = K(in[a], in[c]);
    }
    Eigen::VectorXd x = A.ldlt().solve(b);
    double diff = 0.0;
    for (size_t a = 0; a < in.size(); ++a) diff = std::max(diff, std::abs(x[a] - r9.u[in[a]]));
    CHECK(diff <= 1e-10);

    // Against independent 7-point finite differences: the gap closes at second order.
    Eigen::VectorXd fd9 = fd_oracle_solve(f, coarse);
    double gap9 = (fd9 - r9.u).cwiseAbs().maxCoeff();
    BoxGrid fine = BoxGrid::box(17, Vec3::Zero(), 1.0);
    Eigen::VectorXd fd17 = fd_oracle_solve(f, fine);
    double gap17 = 0.0;
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j)
        for (int k = 0; k < 9; ++k) {
          Eigen::Index q = fine.index(2 * i, 2 * j, 2 * k);
          gap17 = std::max(gap17, std::abs(fd17[q] - r17.u[q]));
        }
    CHECK(gap9 / gap17 > 3.4);
    CHECK(gap9 / gap17 < 4.6);
  }
}

TEST_CASE("legendre fit reproduces polynomials") {
  BoxGrid grid = BoxGrid::box(9, Vec3(0.1, 0.0, -0.2), 0.5);
  Points pts = grid.points();
  Eigen::MatrixXd s(1, grid.size());
  for (Eigen::Index q = 0; q < grid.size(); ++q) {
    Vec3 x = pts.col(q);
    s(0, q) = 1.0 + x[0] * x[1] * x[1] - 3.0 * std::pow(x[2], 4);
  }
  LegendreFit fit = fit_legendre(grid, s, 4);
  CHECK(fit.rms < 1e-13);
  Vec3 x(0.3, -0.1, 0.05);
  Eigen::VectorXd v;
  Eigen::Matrix<double, Eigen::Dynamic, 3> j;
  fit.eval<double>(x, v, j);
  CHECK(std::abs(v[0] - (1.0 + x[0] * x[1] * x[1] - 3.0 * std::pow(x[2], 4))) < 1e-13);
  CHECK(std::abs(j(0, 2) + 12.0 * std::pow(x[2], 3)) < 1e-12);
}

TEST_CASE("harmonic coordinates") {
  BoxGrid grid = BoxGrid::box(17, Vec3::Zero(), 0.5);
  SUBCASE("flat") {
    HarmonicCoordinates hc = harmonic_coordinates(make_metric(box_chart, Euclidean{}), grid, 4);
    CHECK((hc.y - grid.points()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((hc.map(Vec3(0.1, 0.2, -0.3)) - Vec3(0.1, 0.2, -0.3)).norm() <= 1e-10);
  }
  SUBCASE("perturbed") {
    MetricField g = make_metric(box_chart, oracle::SmoothPerturbation{0.2});
    HarmonicCoordinates hc = harmonic_coordinates(g, grid, 8);
    CHECK(hc.converged);
    CHECK(hc.residual <= 1e-8);
    CHECK((hc.jacobian_center - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((hc.map.jacobian(Vec3::Zero()) - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-8);
    // y - x = O(|x|^(1 + alpha)) near the centre.
    DecayFit d = decay_fit([&](const Vec3& x) { return (hc.map(x) - x).norm(); }, {0.05, 0.1, 0.2, 0.4},
                           SphereRule(6));
    CHECK(-d.exponent >= 1.5);
  }
}

TEST_CASE("normal coordinates") {
  SUBCASE("flat") {
    NormalCoordinates nc = normal_coordinates(make_metric(box_chart, Euclidean{}), Vec3::Zero());
    CHECK((nc.map(Vec3(0.1, -0.2, 0.3)) - Vec3(0.1, -0.2, 0.3)).norm() < 1e-15);
  }
  SUBCASE("nonzero christoffel symbols at the centre") {
    auto f = [](const auto& x) {
      using S = std::decay_t<decltype(x[0])>;
      Matrix3<S> m = scaled_identity(S(1.0) + 0.3 * x[0]);
      m(0, 1) = 0.2 * x[2];
      m(1, 0) = m(0, 1);
      m(2, 2) = m(2, 2) + 0.1 * x[1] + 0.05 * x[0] * x[0];
      return m;
    };
    MetricField g = make_metric(box_chart, f);
    NormalCoordinates nc = normal_coordinates(g, Vec3::Zero());
    CHECK(nc.dg_after <= 1e-8);
    DecayFit d = decay_fit([&](const Vec3& y) { return (nc.map(y) - y).norm(); }, {0.01, 0.02, 0.04, 0.08},
                           SphereRule(6));
    CHECK(std::abs(-d.exponent - 2.0) < 0.05);
    NormalCoordinates punct = normal_coordinates(g, Vec3::Zero(), true);
    for (int k = 0; k < 3; ++k) CHECK((punct.gamma0[k] - nc.gamma0[k]).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("yamabe first eigenvalue") {
  SUBCASE("flat torus") {
    YamabeResult y = yamabe_first_eigen(make_catalog_metric(Family::torus_conformal, {0.0}), BoxGrid::torus(8, 1.0));
    CHECK(std::abs(y.lambda) <= 1e-8);
    CHECK(y.eigenfunction.maxCoeff() - y.eigenfunction.minCoeff() <= 1e-8);
  }
  SUBCASE("constant synthetic potential") {
    YamabeOptions opt;
    opt.scalar_override = [](const Vec3&) { return 2.5; };
    YamabeResult y = yamabe_first_eigen(make_catalog_metric(Family::torus_conformal, {0.0}), BoxGrid::torus(8, 1.0), opt);
    CHECK(std::abs(y.lambda - 2.5) <= 1e-8);
    CHECK(y.eigenfunction.maxCoeff() - y.eigenfunction.minCoeff() <= 1e-8);
  }
  SUBCASE("dense oracle on 8^3") {
    MetricField g = make_catalog_metric(Family::torus_conformal, {0.1});
    BoxGrid grid = BoxGrid::torus(8, 1.0);
    DiscreteOperator op = conformal_laplacian_operator(g, grid);
    Eigen::MatrixXd A = Eigen::MatrixXd(op.K);
    A.diagonal() += op.MV;
    Eigen::VectorXd s = op.M.cwiseSqrt().cwiseInverse();
    A = s.asDiagonal() * A * s.asDiagonal();
    double ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues()[0];
    YamabeResult y = yamabe_first_eigen(g, grid);
    CHECK(std::abs(y.lambda - ref) <= 1e-8 * std::abs(ref));
    CHECK(y.positive);
    CHECK(y.eigenfunction.minCoeff() > 0.0);
  }
  SUBCASE("conformally flat torus: discrete eigenvalue vanishes at second order") {
    MetricField g = make_catalog_metric(Family::torus_conformal, {0.1});
    double l8 = yamabe_first_eigen(g, BoxGrid::torus(8, 1.0)).lambda;
    double l16 = yamabe_first_eigen(g, BoxGrid::torus(16, 1.0)).lambda;
    CHECK(l8 / l16 > 3.4);
    CHECK(l8 / l16 < 4.6);
  }
  SUBCASE("box grids are rejected") {
    CHECK_THROWS(yamabe_first_eigen(make_catalog_metric(Family::torus_conformal, {0.1}), BoxGrid::box(9, Vec3::Zero(), 1)));
  }
}
