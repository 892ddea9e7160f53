#pragma once

#include "aegeo/curvature.hpp"
#include "aegeo/fields.hpp"

#include <Eigen/Sparse>
#include <functional>
#include <optional>

namespace aegeo {

using ScalarFn = std::function<double(const Vec3&)>;

// Pointwise Delta_g u = g^ij (d_ij u - Gamma^k_ij d_k u) from jets.
double laplacian_at(const MetricField& g, const ScalarField& u, const Vec3& p);

// Uniform node lattice: a box [center - half, center + half]^3 with n nodes per axis,
// or a periodic torus [0, period)^3 with n nodes per axis.
struct BoxGrid {
  int n = 17;
  Vec3 center = Vec3::Zero();
  double half = 1.0;
  bool periodic = false;

  static BoxGrid box(int n, Vec3 center, double half) { return {n, center, half, false}; }
  static BoxGrid torus(int n, double period) { return {n, Vec3::Constant(0.5 * period), 0.5 * period, true}; }

  double h() const { return periodic ? 2.0 * half / n : 2.0 * half / (n - 1); }
  Eigen::Index size() const { return Eigen::Index(n) * n * n; }
  Eigen::Index index(int i, int j, int k) const { return (Eigen::Index(i) * n + j) * n + k; }
  Vec3 point(int i, int j, int k) const;
  Vec3 point(Eigen::Index q) const;
  bool boundary(Eigen::Index q) const;
  Points points() const;
  Eigen::Index center_index() const;  // needs odd n on a box
};

// Discrete operators for the energy form: u^T K u ~ int |du|_g^2 dV_g,
// M = lumped sqrt(g) volume, MV = lumped potential * sqrt(g) volume.
struct DiscreteOperator {
  BoxGrid grid;
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd M, MV;
};

DiscreteOperator assemble_operator(const MetricField& g, const BoxGrid& grid, const ScalarFn& potential = {});

// Delta_g u at the nodes; boundary nodes of a box are left at zero.
Eigen::VectorXd laplace_beltrami(const MetricField& g, const BoxGrid& grid, const Eigen::VectorXd& u);
Eigen::VectorXd laplace_beltrami(const DiscreteOperator& op, const Eigen::VectorXd& u);

// Delta_g u - V u = rhs on the box, u = boundary on the box faces.
struct EllipticProblem {
  MetricField metric;
  BoxGrid grid;
  ScalarFn rhs;
  ScalarFn boundary;
  ScalarFn potential;
  double tolerance = 1e-10;
  int max_iterations = 4000;
};

struct DirichletResult {
  Eigen::VectorXd u;
  double residual = 0.0;  // sup over interior nodes of |Delta_g u - V u - rhs|
  int iterations = 0;
  bool converged = false;
};

DirichletResult dirichlet_solve(const EllipticProblem& problem);
// Same solve on a pre-assembled operator with values for boundary nodes taken from u0.
DirichletResult dirichlet_solve(const DiscreteOperator& op, const Eigen::VectorXd& rhs, const Eigen::VectorXd& u0,
                                double tolerance, int max_iterations);

// Tensor Legendre polynomial map R^3 -> R^m on a box, total degree <= degree.
struct LegendreFit {
  Vec3 center = Vec3::Zero();
  double half = 1.0;
  int degree = 8;
  Eigen::MatrixXd coef;  // m x nbasis
  double rms = 0.0;

  int basis_size() const { return (degree + 1) * (degree + 2) * (degree + 3) / 6; }

  template <typename S>
  Eigen::Matrix<S, Eigen::Dynamic, 1> eval(const Vector3<S>& x) const;
  // Value and jacobian (m x 3).
  template <typename S>
  void eval(const Vector3<S>& x, Eigen::Matrix<S, Eigen::Dynamic, 1>& v, Eigen::Matrix<S, Eigen::Dynamic, 3>& jac) const;
};

// Least squares over the grid nodes; samples are m x nodes.
LegendreFit fit_legendre(const BoxGrid& grid, const Eigen::MatrixXd& samples, int degree);

struct HarmonicCoordinates {
  BoxGrid grid;
  Eigen::MatrixXd y;      // 3 x nodes, normalized so y(center) = 0 and dy/dx(center) = I
  Mat3 A = Mat3::Identity();  // dy/dx at the center before normalization
  double residual = 0.0;  // sup |Delta_g y|
  Mat3 jacobian_center = Mat3::Identity();  // centred FD of the normalized samples
  LegendreFit fit;        // smooth reconstruction x -> y
  CoordinateMap map;      // x -> y, exactly normalized at the center
  bool converged = false;
};

HarmonicCoordinates harmonic_coordinates(const MetricField& g, const BoxGrid& grid, int fit_degree = 8,
                                         double tolerance = 1e-10);

struct NormalCoordinates {
  CoordinateMap map;           // y -> ybar
  Christoffel gamma0;           // Gamma(center) used
  double metric_defect = 0.0;  // |g(center) - delta|
  double dg_after = 0.0;       // |d g'(0)| of the pulled-back metric
};

// ybar = d + Gamma(c) d d / 2, d = y - c. With punctured = true, values at c are radial
// extrapolations over 4 shells of radius shell, 2 shell, 3 shell, 4 shell.
NormalCoordinates normal_coordinates(const MetricField& g, const Vec3& center, bool punctured = false,
                                     double shell = 1e-3, double metric_tolerance = 1e-6);

struct YamabeResult {
  double lambda = 0.0;
  Eigen::VectorXd eigenfunction;
  double rayleigh_residual = 0.0;
  double pde_residual = 0.0;
  Eigen::VectorXd new_scalar;
  int iterations = 0;
  bool converged = false;
  bool positive = false;
  double shift = 0.0;
};

struct YamabeOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
  ScalarFn scalar_override;  // synthetic potential mode
};

YamabeResult yamabe_first_eigen(const MetricField& g, const BoxGrid& torus, const YamabeOptions& opt = {});
// 8 K + M_R and M for the conformal Laplacian on the torus (for oracles).
DiscreteOperator conformal_laplacian_operator(const MetricField& g, const BoxGrid& torus, const ScalarFn& scalar = {});

template <typename S>
void legendre_values(const S& t, int degree, S* p, S* dp) {
  p[0] = S(1.0);
  dp[0] = S(0.0);
  if (degree == 0) return;
  p[1] = t;
  dp[1] = S(1.0);
  for (int n = 1; n < degree; ++n) {
    p[n + 1] = (t * p[n] * double(2 * n + 1) - p[n - 1] * double(n)) / double(n + 1);
    dp[n + 1] = dp[n - 1] + p[n] * double(2 * n + 1);
  }
}

template <typename S>
void LegendreFit::eval(const Vector3<S>& x, Eigen::Matrix<S, Eigen::Dynamic, 1>& v,
                       Eigen::Matrix<S, Eigen::Dynamic, 3>& jac) const {
  const int m = static_cast<int>(coef.rows());
  std::vector<S> p(3 * (degree + 1)), dp(3 * (degree + 1));
  for (int a = 0; a < 3; ++a)
    legendre_values<S>((x[a] - center[a]) / half, degree, &p[a * (degree + 1)], &dp[a * (degree + 1)]);
  v.resize(m);
  jac.resize(m, 3);
  for (int r = 0; r < m; ++r) {
    v[r] = S(0.0);
    for (int c = 0; c < 3; ++c) jac(r, c) = S(0.0);
  }
  const S* px = &p[0];
  const S* py = &p[degree + 1];
  const S* pz = &p[2 * (degree + 1)];
  const S* dx = &dp[0];
  const S* dy = &dp[degree + 1];
  const S* dz = &dp[2 * (degree + 1)];
  int col = 0;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; a + b <= degree; ++b) {
      S pab = px[a] * py[b], dab = dx[a] * py[b], adb = px[a] * dy[b];
      for (int c = 0; a + b + c <= degree; ++c, ++col) {
        S f = pab * pz[c], fx = dab * pz[c], fy = adb * pz[c], fz = pab * dz[c];
        for (int r = 0; r < m; ++r) {
          double k = coef(r, col);
          if (k == 0.0) continue;
          v[r] += f * k;
          jac(r, 0) += fx * (k / half);
          jac(r, 1) += fy * (k / half);
          jac(r, 2) += fz * (k / half);
        }
      }
    }
}

template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, 1> LegendreFit::eval(const Vector3<S>& x) const {
  Eigen::Matrix<S, Eigen::Dynamic, 1> v;
  Eigen::Matrix<S, Eigen::Dynamic, 3> j;
  eval(x, v, j);
  return v;
}

}  // namespace aegeo
