// Dense generalized eigensolve of the discrete conformal Laplacian on the torus.
// Prints the smallest eigenvalue for freezing into the acceptance test.
#include "aegeo/catalog.hpp"
#include "aegeo/elliptic.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cstdio>

int main(int argc, char** argv) {
  using namespace aegeo;
  double a = argc > 1 ? std::atof(argv[1]) : 0.1;
  int n = argc > 2 ? std::atoi(argv[2]) : 16;
  auto t0 = std::chrono::steady_clock::now();
  MetricField g = make_catalog_metric(Family::torus_conformal, {a});
  DiscreteOperator op = conformal_laplacian_operator(g, BoxGrid::torus(n, 1.0));
  Eigen::MatrixXd A = Eigen::MatrixXd(op.K);
  A.diagonal() += op.MV;
  Eigen::VectorXd s = op.M.cwiseSqrt().cwiseInverse();
  A = s.asDiagonal() * A * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("lambda_min %.17g  lambda_2 %.17g  (%d^3, %.1f s)\n", es.eigenvalues()[0], es.eigenvalues()[1], n, secs);
}
