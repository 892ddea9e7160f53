#include "aegeo/elliptic.hpp"

#include "aegeo/asymptotics.hpp"
#include "aegeo/curvature.hpp"
#include "aegeo/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/QR>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace aegeo {

double laplacian_at(const MetricField& g, const ScalarField& u, const Vec3& p) {
  Christoffel gam = christoffel_at(g, p);
  Mat3 gi = g(p).inverse();
  JetD uj = u.jet(p);
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double v = uj.d(i, j);
      for (int k = 0; k < 3; ++k) v -= gam[k](i, j) * uj.d(k);
      s += gi(i, j) * v;
    }
  return s;
}

Vec3 BoxGrid::point(int i, int j, int k) const {
  if (periodic) return h() * Vec3(i, j, k);
  return center - Vec3::Constant(half) + h() * Vec3(i, j, k);
}

Vec3 BoxGrid::point(Eigen::Index q) const {
  int k = static_cast<int>(q % n), j = static_cast<int>((q / n) % n), i = static_cast<int>(q / (Eigen::Index(n) * n));
  return point(i, j, k);
}

bool BoxGrid::boundary(Eigen::Index q) const {
  if (periodic) return false;
  int k = static_cast<int>(q % n), j = static_cast<int>((q / n) % n), i = static_cast<int>(q / (Eigen::Index(n) * n));
  return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
}

Points BoxGrid::points() const {
  Points p(3, size());
  for (Eigen::Index q = 0; q < size(); ++q) p.col(q) = point(q);
  return p;
}

Eigen::Index BoxGrid::center_index() const {
  if (periodic || n % 2 == 0) throw std::invalid_argument("grid centre is a node only for odd n on a box");
  return index(n / 2, n / 2, n / 2);
}

namespace {

// s[i][j][a][b] = integral over the unit cube of d_i phi_a d_j phi_b for trilinear phi.
struct ElementTable {
  double s[3][3][8][8];
  ElementTable() {
    const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    for (auto& a : s)
      for (auto& b : a)
        for (auto& c : b)
          for (double& d : c) d = 0.0;
    for (int q = 0; q < 8; ++q) {
      double xi[3] = {g[q >> 2 & 1], g[q >> 1 & 1], g[q & 1]};
      double grad[8][3];
      for (int a = 0; a < 8; ++a) {
        int c[3] = {a >> 2 & 1, a >> 1 & 1, a & 1};
        double f[3], df[3];
        for (int d = 0; d < 3; ++d) {
          f[d] = c[d] ? xi[d] : 1.0 - xi[d];
          df[d] = c[d] ? 1.0 : -1.0;
        }
        grad[a][0] = df[0] * f[1] * f[2];
        grad[a][1] = f[0] * df[1] * f[2];
        grad[a][2] = f[0] * f[1] * df[2];
      }
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) s[i][j][a][b] += 0.125 * grad[a][i] * grad[b][j];
    }
  }
};

const ElementTable& element_table() {
  static const ElementTable t;
  return t;
}

}  // namespace

DiscreteOperator assemble_operator(const MetricField& g, const BoxGrid& grid, const ScalarFn& potential) {
  const auto& et = element_table();
  const int n = grid.n;
  const int cells = grid.periodic ? n : n - 1;
  const double h = grid.h();
  const long ncell = long(cells) * cells * cells;
  std::vector<Mat3> coef(ncell);
  std::vector<double> vol(ncell), pot(ncell, 0.0);
  parallel_for(ncell, [&](long c) {
    int i = static_cast<int>(c / (long(cells) * cells)), j = static_cast<int>((c / cells) % cells),
        k = static_cast<int>(c % cells);
    Vec3 p = grid.point(i, j, k) + Vec3::Constant(0.5 * h);
    Mat3 m = g(p);
    double sg = std::sqrt(m.determinant());
    coef[c] = sg * m.inverse();
    vol[c] = sg;
    if (potential) pot[c] = potential(p);
  });
  DiscreteOperator op;
  op.grid = grid;
  op.M = Eigen::VectorXd::Zero(grid.size());
  op.MV = Eigen::VectorXd::Zero(grid.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(ncell * 64);
  for (long c = 0; c < ncell; ++c) {
    int i = static_cast<int>(c / (long(cells) * cells)), j = static_cast<int>((c / cells) % cells),
        k = static_cast<int>(c % cells);
    Eigen::Index node[8];
    for (int a = 0; a < 8; ++a) {
      int ii = i + (a >> 2 & 1), jj = j + (a >> 1 & 1), kk = k + (a & 1);
      if (grid.periodic) { ii %= n; jj %= n; kk %= n; }
      node[a] = grid.index(ii, jj, kk);
    }
    const Mat3& A = coef[c];
    for (int a = 0; a < 8; ++a) {
      op.M[node[a]] += vol[c] * h * h * h / 8.0;
      op.MV[node[a]] += pot[c] * vol[c] * h * h * h / 8.0;
      for (int b = 0; b < 8; ++b) {
        double v = 0.0;
        for (int x = 0; x < 3; ++x)
          for (int y = 0; y < 3; ++y) v += A(x, y) * et.s[x][y][a][b];
        trip.emplace_back(node[a], node[b], h * v);
      }
    }
  }
  op.K.resize(grid.size(), grid.size());
  op.K.setFromTriplets(trip.begin(), trip.end());
  return op;
}

Eigen::VectorXd laplace_beltrami(const DiscreteOperator& op, const Eigen::VectorXd& u) {
  Eigen::VectorXd ku = op.K * u;
  Eigen::VectorXd out(u.size());
  for (Eigen::Index q = 0; q < u.size(); ++q) out[q] = op.grid.boundary(q) ? 0.0 : -ku[q] / op.M[q];
  return out;
}

Eigen::VectorXd laplace_beltrami(const MetricField& g, const BoxGrid& grid, const Eigen::VectorXd& u) {
  return laplace_beltrami(assemble_operator(g, grid), u);
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Solves A x = b to near machine precision, starting from x.
int spd_solve(const SpMat& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, int max_iterations, bool& ok) {
  int iters = 0;
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setMaxIterations(max_iterations);
  cg.setTolerance(1e-15);
  cg.compute(A);
  ok = cg.info() == Eigen::Success;
  if (ok) {
    for (int round = 0; round < 3; ++round) {
      Eigen::VectorXd r = b - A * x;
      if (r.norm() <= 1e-15 * b.norm()) break;
      Eigen::VectorXd dx = cg.solve(r);
      iters += static_cast<int>(cg.iterations());
      x += dx;
    }
    ok = (b - A * x).norm() <= 1e-12 * std::max(b.norm(), 1e-300) || b.norm() == 0.0;
  }
  if (!ok) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) return iters;
    x = lu.solve(b);
    Eigen::VectorXd r = b - A * x;
    x += lu.solve(r);
    ok = lu.info() == Eigen::Success;
  }
  return iters;
}

}  // namespace

DirichletResult dirichlet_solve(const DiscreteOperator& op, const Eigen::VectorXd& rhs, const Eigen::VectorXd& u0,
                                double tolerance, int max_iterations) {
  const BoxGrid& grid = op.grid;
  const Eigen::Index N = grid.size();
  std::vector<Eigen::Index> map(N, -1), interior;
  for (Eigen::Index q = 0; q < N; ++q)
    if (!grid.boundary(q)) {
      map[q] = static_cast<Eigen::Index>(interior.size());
      interior.push_back(q);
    }
  const Eigen::Index ni = static_cast<Eigen::Index>(interior.size());
  SpMat A = op.K;
  for (Eigen::Index q = 0; q < N; ++q) A.coeffRef(q, q) += op.MV[q];
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b(ni);
  for (Eigen::Index t = 0; t < ni; ++t) b[t] = -op.M[interior[t]] * rhs[interior[t]];
  for (int c = 0; c < A.outerSize(); ++c)
    for (SpMat::InnerIterator it(A, c); it; ++it) {
      Eigen::Index r = it.row(), col = it.col();
      if (map[r] < 0) continue;
      if (map[col] >= 0) trip.emplace_back(map[r], map[col], it.value());
      else b[map[r]] -= it.value() * u0[col];
    }
  SpMat Aii(ni, ni);
  Aii.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd x(ni);
  for (Eigen::Index t = 0; t < ni; ++t) x[t] = u0[interior[t]];
  bool ok = false;
  DirichletResult res;
  res.iterations = spd_solve(Aii, b, x, max_iterations, ok);
  res.u = u0;
  for (Eigen::Index t = 0; t < ni; ++t) res.u[interior[t]] = x[t];
  Eigen::VectorXd au = A * res.u;
  double sup = 0.0;
  for (Eigen::Index q : interior) sup = std::max(sup, std::abs(-au[q] / op.M[q] - rhs[q]));
  res.residual = sup;
  res.converged = ok && sup <= tolerance;
  return res;
}

DirichletResult dirichlet_solve(const EllipticProblem& pb) {
  if (pb.grid.periodic) throw std::invalid_argument("dirichlet solve needs a box grid");
  DiscreteOperator op = assemble_operator(pb.metric, pb.grid, pb.potential);
  const Eigen::Index N = pb.grid.size();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N), u0 = Eigen::VectorXd::Zero(N);
  for (Eigen::Index q = 0; q < N; ++q) {
    Vec3 p = pb.grid.point(q);
    if (pb.rhs) rhs[q] = pb.rhs(p);
    if (pb.grid.boundary(q)) u0[q] = pb.boundary(p);
  }
  // Interior guess: boundary data extended by the same closure.
  for (Eigen::Index q = 0; q < N; ++q)
    if (!pb.grid.boundary(q)) u0[q] = pb.boundary(pb.grid.point(q));
  return dirichlet_solve(op, rhs, u0, pb.tolerance, pb.max_iterations);
}

LegendreFit fit_legendre(const BoxGrid& grid, const Eigen::MatrixXd& samples, int degree) {
  LegendreFit f;
  f.center = grid.center;
  f.half = grid.half;
  f.degree = degree;
  const int nb = f.basis_size();
  const Eigen::Index N = grid.size();
  Eigen::MatrixXd D(N, nb);
  std::vector<double> p(3 * (degree + 1)), dp(3 * (degree + 1));
  for (Eigen::Index q = 0; q < N; ++q) {
    Vec3 x = grid.point(q);
    for (int a = 0; a < 3; ++a)
      legendre_values<double>((x[a] - f.center[a]) / f.half, degree, &p[a * (degree + 1)], &dp[a * (degree + 1)]);
    int col = 0;
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b)
        for (int c = 0; a + b + c <= degree; ++c) D(q, col++) = p[a] * p[degree + 1 + b] * p[2 * (degree + 1) + c];
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(D);
  Eigen::MatrixXd sol = qr.solve(samples.transpose());
  f.coef = sol.transpose();
  f.rms = std::sqrt((D * sol - samples.transpose()).squaredNorm() / double(N * samples.rows()));
  return f;
}

namespace {

struct LegendreMap {
  std::shared_ptr<const LegendreFit> fit;
  template <typename S>
  Vector3<S> operator()(const Vector3<S>& x) const {
    auto v = fit->eval(x);
    return Vector3<S>(v[0], v[1], v[2]);
  }
};

struct LegendreJacobian {
  std::shared_ptr<const LegendreFit> fit;
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& x) const {
    Eigen::Matrix<S, Eigen::Dynamic, 1> v;
    Eigen::Matrix<S, Eigen::Dynamic, 3> j;
    fit->eval(x, v, j);
    Matrix3<S> m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = j(r, c);
    return m;
  }
};

}  // namespace

HarmonicCoordinates harmonic_coordinates(const MetricField& g, const BoxGrid& grid, int fit_degree, double tol) {
  if (grid.periodic) throw std::invalid_argument("harmonic coordinates need a box grid");
  HarmonicCoordinates hc;
  hc.grid = grid;
  DiscreteOperator op = assemble_operator(g, grid);
  const Eigen::Index N = grid.size();
  Eigen::MatrixXd Y(3, N);
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(N);
  bool ok = true;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd u0(N);
    for (Eigen::Index q = 0; q < N; ++q) u0[q] = grid.point(q)[k];
    DirichletResult r = dirichlet_solve(op, zero, u0, tol, 20000);
    ok = ok && r.converged;
    Y.row(k) = r.u.transpose();
  }
  const Eigen::Index c = grid.center_index();
  const double h = grid.h();
  const int m = grid.n / 2;
  auto fd_center = [&](const Eigen::MatrixXd& y) {
    Mat3 a;
    for (int d = 0; d < 3; ++d) {
      int ip[3] = {m, m, m}, im[3] = {m, m, m};
      ++ip[d];
      --im[d];
      a.col(d) = (y.col(grid.index(ip[0], ip[1], ip[2])) - y.col(grid.index(im[0], im[1], im[2]))) / (2.0 * h);
    }
    return a;
  };
  hc.A = fd_center(Y);
  if (std::abs(hc.A.determinant()) < 1e-12) throw std::domain_error("harmonic coordinates: dy/dx(0) is singular");
  Vec3 yc = Y.col(c);
  hc.y = hc.A.inverse() * (Y.colwise() - yc);
  hc.jacobian_center = fd_center(hc.y);
  double sup = 0.0;
  for (int k = 0; k < 3; ++k) sup = std::max(sup, laplace_beltrami(op, hc.y.row(k).transpose()).cwiseAbs().maxCoeff());
  hc.residual = sup;
  hc.converged = ok && sup <= std::max(tol, 1e-8);
  hc.fit = fit_legendre(grid, hc.y, fit_degree);
  // Exact affine normalization of the reconstruction at the centre.
  {
    Eigen::VectorXd v;
    Eigen::Matrix<double, Eigen::Dynamic, 3> j;
    Vec3 x0 = grid.point(c);
    hc.fit.eval<double>(x0, v, j);
    Mat3 ji = Mat3(j).inverse();
    hc.fit.coef = ji * hc.fit.coef;
    hc.fit.coef.col(0) -= ji * Vec3(v);
  }
  auto fit = std::make_shared<const LegendreFit>(hc.fit);
  Chart target = g.chart;
  target.kind = ChartKind::harmonic_y;
  target.name = "y";
  hc.map = make_map(g.chart, target, LegendreMap{fit}, LegendreJacobian{fit}, "harmonic");
  hc.map.both_jet = [fit](const Vec3J& x) {
    Eigen::Matrix<JetD, Eigen::Dynamic, 1> v;
    Eigen::Matrix<JetD, Eigen::Dynamic, 3> j;
    fit->eval(x, v, j);
    std::pair<Vec3J, Mat3J> out;
    for (int r = 0; r < 3; ++r) {
      out.first[r] = v[r];
      for (int c = 0; c < 3; ++c) out.second(r, c) = j(r, c);
    }
    return out;
  };
  return hc;
}

NormalCoordinates normal_coordinates(const MetricField& g, const Vec3& center, bool punctured, double shell,
                                     double tol) {
  NormalCoordinates nc;
  Mat3 g0;
  if (!punctured) {
    g0 = g(center);
    nc.gamma0 = christoffel_at(g, center);
  } else {
    SphereRule s(6);
    std::vector<double> t;
    std::vector<Mat3> gm;
    std::vector<Christoffel> cm;
    for (int k = 1; k <= 4; ++k) {
      Mat3 ga = Mat3::Zero();
      Christoffel ca{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        Vec3 p = center + k * shell * s.dirs.col(j);
        double w = s.weights[j] / (4.0 * M_PI);
        ga += w * g(p);
        Christoffel c = christoffel_at(g, p);
        for (int a = 0; a < 3; ++a) ca[a] += w * c[a];
      }
      t.push_back(k * shell);
      gm.push_back(ga);
      cm.push_back(ca);
    }
    std::vector<double> y(4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 4; ++k) y[k] = gm[k](i, j);
        g0(i, j) = extrapolate_to_zero(t, y, 2);
        for (int a = 0; a < 3; ++a) {
          for (int k = 0; k < 4; ++k) y[k] = cm[k][a](i, j);
          nc.gamma0[a](i, j) = extrapolate_to_zero(t, y, 2);
        }
      }
  }
  nc.metric_defect = (g0 - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (nc.metric_defect > tol) throw std::domain_error("normal coordinates: g(center) differs from delta");
  const Christoffel G = nc.gamma0;
  auto fwd = [G, center](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    Vector3<S> d;
    for (int i = 0; i < 3; ++i) d[i] = y[i] - center[i];
    Vector3<S> out = d;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) out[i] = out[i] + 0.5 * G[i](j, k) * d[j] * d[k];
    return out;
  };
  auto jac = [G, center](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    Matrix3<S> m;
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a) {
        S v(i == a ? 1.0 : 0.0);
        for (int k = 0; k < 3; ++k) v = v + G[i](a, k) * (y[k] - center[k]);
        m(i, a) = v;
      }
    return m;
  };
  Chart target = g.chart;
  target.kind = ChartKind::normal_ybar;
  target.name = "ybar";
  nc.map = make_map(g.chart, target, fwd, jac, "normal");
  nc.map.backward_fn = [center](const Vec3& q) { return Vec3(q + center); };
  // Metric in ybar near 0: derivative defect, evaluated at 0 or extrapolated.
  CoordinateMap back = inverse_map(nc.map);
  MetricField gp = pullback(g, back);
  auto dnorm = [&](const Vec3& p) {
    Mat3J j = gp.jet(p);
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) s = std::max(s, std::abs(j(a, b).d(c)));
    return s;
  };
  if (!punctured) {
    nc.dg_after = dnorm(Vec3::Zero());
  } else {
    SphereRule s(6);
    std::vector<double> t, y;
    for (int k = 1; k <= 4; ++k) {
      Mat3 avg[3] = {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
      for (Eigen::Index j = 0; j < s.size(); ++j) {
        Mat3J m = gp.jet(Vec3(k * shell * s.dirs.col(j)));
        for (int c = 0; c < 3; ++c)
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) avg[c](a, b) += s.weights[j] / (4.0 * M_PI) * m(a, b).d(c);
      }
      t.push_back(k * shell);
      double mx = 0.0;
      for (int c = 0; c < 3; ++c) mx = std::max(mx, avg[c].cwiseAbs().maxCoeff());
      y.push_back(mx);
    }
    nc.dg_after = std::abs(extrapolate_to_zero(t, y, 1));
  }
  return nc;
}

DiscreteOperator conformal_laplacian_operator(const MetricField& g, const BoxGrid& grid, const ScalarFn& scalar) {
  ScalarFn R = scalar ? scalar : ScalarFn([&g](const Vec3& p) { return scalar_curvature_at(g, p); });
  DiscreteOperator op = assemble_operator(g, grid, R);
  op.K *= 8.0;
  return op;
}

YamabeResult yamabe_first_eigen(const MetricField& g, const BoxGrid& grid, const YamabeOptions& opt) {
  if (!grid.periodic) throw std::invalid_argument("yamabe solver needs a torus grid");
  if (!std::holds_alternative<Torus>(g.chart.domain)) throw std::invalid_argument("yamabe solver needs a torus metric");
  // Cell-centre scalar curvature also feeds the shift.
  const int n = grid.n;
  const double h = grid.h();
  double rmin = INFINITY;
  ScalarFn R = opt.scalar_override ? opt.scalar_override : ScalarFn([&g](const Vec3& p) { return scalar_curvature_at(g, p); });
  std::vector<double> rc(std::size_t(n) * n * n);
  parallel_for(static_cast<long>(rc.size()), [&](long c) {
    int i = static_cast<int>(c / (long(n) * n)), j = static_cast<int>((c / n) % n), k = static_cast<int>(c % n);
    rc[c] = R(grid.point(i, j, k) + Vec3::Constant(0.5 * h));
  });
  for (double v : rc) rmin = std::min(rmin, v);
  ScalarFn cached = [&rc, n, h](const Vec3& p) {
    int i = static_cast<int>(std::floor(p[0] / h)), j = static_cast<int>(std::floor(p[1] / h)),
        k = static_cast<int>(std::floor(p[2] / h));
    return rc[(std::size_t(i) * n + j) * n + k];
  };
  DiscreteOperator op = conformal_laplacian_operator(g, grid, cached);
  SpMat L = op.K;
  for (Eigen::Index q = 0; q < grid.size(); ++q) L.coeffRef(q, q) += op.MV[q];
  YamabeResult res;
  res.shift = std::max(0.0, -rmin) + 1.0;
  SpMat A = L;
  for (Eigen::Index q = 0; q < grid.size(); ++q) A.coeffRef(q, q) += res.shift * op.M[q];
  const Eigen::VectorXd& M = op.M;
  auto mnorm = [&M](const Eigen::VectorXd& v) { return std::sqrt(v.dot(M.cwiseProduct(v))); };
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(grid.size());
  phi /= mnorm(phi);
  Eigen::VectorXd psi = phi;
  double lam_inv = 0.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    bool ok = false;
    spd_solve(A, M.cwiseProduct(phi), psi, 20000, ok);
    if (!ok) break;
    lam_inv = 1.0 / phi.dot(M.cwiseProduct(psi)) - res.shift;
    phi = psi.cwiseAbs();
    phi /= mnorm(phi);
    psi = phi;
    res.iterations = it;
    Eigen::VectorXd lp = L * phi;
    res.lambda = phi.dot(lp);
    double sup = 0.0;
    for (Eigen::Index q = 0; q < grid.size(); ++q) sup = std::max(sup, std::abs((lp[q] - res.lambda * M[q] * phi[q]) / M[q]));
    res.pde_residual = sup;
    res.rayleigh_residual = std::abs(res.lambda - lam_inv);
    if (sup <= opt.tolerance && res.rayleigh_residual <= 1e-12 * std::max(1.0, std::abs(res.lambda))) {
      res.converged = true;
      break;
    }
  }
  res.eigenfunction = phi;
  res.positive = phi.minCoeff() > 0.0;
  res.new_scalar = res.lambda * phi.array().pow(-4.0).matrix();
  return res;
}

}  // namespace aegeo
