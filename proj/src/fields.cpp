#include "aegeo/fields.hpp"

#include "aegeo/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace aegeo {

void require_spd(const MetricField& g, const Points& nodes) {
  const double sym_tol = g.grid ? 1e-14 : 0.0;
  for (Eigen::Index k = 0; k < nodes.cols(); ++k) {
    Mat3 m = g(nodes.col(k));
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
      std::ostringstream os;
      os << "metric " << g.label << " not symmetric at node " << nodes.col(k).transpose();
      throw std::domain_error(os.str());
    }
    double lo = Eigen::SelfAdjointEigenSolver<Mat3>(m, Eigen::EigenvaluesOnly).eigenvalues()[0];
    if (!(lo > 0.0)) {
      std::ostringstream os;
      os << "metric " << g.label << " not positive definite at node " << nodes.col(k).transpose()
         << " (smallest eigenvalue " << lo << ")";
      throw std::domain_error(os.str());
    }
  }
}

void TensorField::validate() const {
  Eigen::Index rows = 1;
  for (int i = 0; i < rank(); ++i) rows *= 3;
  if (components.rows() != rows || components.cols() != nodes.cols())
    throw std::invalid_argument("tensor field component array has wrong shape");
}

CoordinateMap identity_map(const Chart& c) {
  auto m = make_map(
      c, c, [](const auto& p) { return p; },
      [](const auto& p) {
        using S = typename std::decay_t<decltype(p)>::Scalar;
        return Matrix3<S>::Identity().eval();
      },
      "identity");
  m.backward_fn = [](const Vec3& p) { return p; };
  m.classification = CoordinateMap::Classification{"identity", std::numeric_limits<double>::infinity()};
  return m;
}

CoordinateMap compose(const CoordinateMap& b, const CoordinateMap& a) {
  CoordinateMap m;
  m.source = a.source;
  m.target = b.target;
  m.forward_fn = [a, b](const Vec3& p) { return b.forward_fn(a.forward_fn(p)); };
  m.forward_jet = [a, b](const Vec3J& p) { return b.forward_jet(a.forward_jet(p)); };
  m.jacobian_fn = [a, b](const Vec3& p) { return Mat3(b.jacobian_fn(a.forward_fn(p)) * a.jacobian_fn(p)); };
  m.jacobian_jet = [a, b](const Vec3J& p) { return Mat3J(b.jacobian_jet(a.forward_jet(p)) * a.jacobian_jet(p)); };
  m.both_jet = [a, b](const Vec3J& p) {
    auto [xa, ja] = a.jets(p);
    auto [xb, jb] = b.jets(xa);
    return std::pair<Vec3J, Mat3J>(xb, Mat3J(jb * ja));
  };
  if (a.backward_fn && b.backward_fn)
    m.backward_fn = [a, b](const Vec3& q) { return a.backward_fn(b.backward_fn(q)); };
  m.label = b.label + " o " + a.label;
  return m;
}

namespace {

Vec3 newton_solve(const CoordinateMap& m, const Vec3& q, const Vec3& x0) {
  Vec3 x = x0;
  for (int it = 0; it < 60; ++it) {
    Vec3 f = m.forward_fn(x) - q;
    Vec3 dx = m.jacobian_fn(x).lu().solve(f);
    x -= dx;
    if (dx.norm() <= 1e-15 * (1.0 + x.norm())) break;
  }
  return x;
}

}  // namespace

CoordinateMap inverse_map(const CoordinateMap& m, std::function<Vec3(const Vec3&)> guess) {
  CoordinateMap r;
  r.source = m.target;
  r.target = m.source;
  auto start = [m, guess](const Vec3& q) -> Vec3 {
    if (guess) return guess(q);
    if (m.backward_fn) return m.backward_fn(q);
    return q;
  };
  r.forward_fn = [m, start](const Vec3& q) { return newton_solve(m, q, start(q)); };
  r.forward_jet = [m, start](const Vec3J& q) {
    Vec3 q0 = values(q);
    Vec3 x0 = newton_solve(m, q0, start(q0));
    Mat3 jinv = m.jacobian_fn(x0).inverse();
    Vec3J x;
    for (int i = 0; i < 3; ++i) x[i] = JetD(x0[i]);
    for (int it = 0; it < 4; ++it) {
      Vec3J f = m.forward_jet(x) - q;
      Vec3J dx;
      for (int i = 0; i < 3; ++i) dx[i] = jinv(i, 0) * f[0] + jinv(i, 1) * f[1] + jinv(i, 2) * f[2];
      x -= dx;
    }
    return x;
  };
  r.jacobian_fn = [r_fwd = r.forward_fn, m](const Vec3& q) { return Mat3(m.jacobian_fn(r_fwd(q)).inverse()); };
  r.jacobian_jet = [r_jet = r.forward_jet, m](const Vec3J& q) { return inv3<JetD>(m.jacobian_jet(r_jet(q))); };
  r.both_jet = [r_jet = r.forward_jet, m](const Vec3J& q) {
    Vec3J x = r_jet(q);
    return std::pair<Vec3J, Mat3J>(x, inv3<JetD>(m.jacobian_jet(x)));
  };
  r.backward_fn = m.forward_fn;
  r.label = "inverse(" + m.label + ")";
  return r;
}

MetricField pullback(const MetricField& g, const CoordinateMap& m) {
  MetricField r;
  r.chart = m.source;
  r.value_fn = [g, m](const Vec3& p) {
    Mat3 j = m.jacobian_fn(p);
    if (!(std::abs(j.determinant()) > 0.0) || !std::isfinite(j.determinant())) throw std::domain_error("pullback: singular jacobian");
    return Mat3(j.transpose() * g.value_fn(m.forward_fn(p)) * j);
  };
  r.jet_fn = [g, m](const Vec3J& p) {
    auto [x, j] = m.jets(p);
    return Mat3J(j.transpose() * g.jet_fn(x) * j);
  };
  r.decay_tag = g.decay_tag;
  r.label = "pullback(" + g.label + ")";
  return r;
}

ScalarField pullback(const ScalarField& f, const CoordinateMap& m) {
  ScalarField r;
  r.chart = m.source;
  r.value_fn = [f, m](const Vec3& p) { return f.value_fn(m.forward_fn(p)); };
  r.jet_fn = [f, m](const Vec3J& p) { return f.jet_fn(m.forward_jet(p)); };
  r.label = "pullback(" + f.label + ")";
  return r;
}

MetricField conformal(const MetricField& g, const ScalarField& f) {
  MetricField r = g;
  r.value_fn = [g, f](const Vec3& p) {
    double w = f.value_fn(p);
    w *= w;
    return Mat3(w * w * g.value_fn(p));
  };
  r.jet_fn = [g, f](const Vec3J& p) {
    JetD w = f.jet_fn(p);
    w = w * w;
    w = w * w;
    Mat3J m = g.jet_fn(p);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = w * m(i, j);
    return m;
  };
  r.label = "conformal(" + g.label + ")";
  return r;
}

namespace {

// Polynomial p (a jet in local offsets) evaluated at the jet offset dx.
JetD substitute(const JetD& p, const Vec3J& dx) {
  std::array<std::array<JetD, 4>, 3> pw;
  for (int a = 0; a < 3; ++a) {
    pw[a][0] = JetD(1.0);
    for (int k = 1; k < 4; ++k) pw[a][k] = pw[a][k - 1] * dx[a];
  }
  JetD r(p.c[0]);
  for (int m = 1; m < 20; ++m) {
    if (p.c[m] == 0.0) continue;
    const auto& e = jet_detail::exponents[m];
    JetD t = pw[0][e.a];
    if (e.b) t = t * pw[1][e.b];
    if (e.c) t = t * pw[2][e.c];
    r += t * p.c[m];
  }
  return r;
}

Mat3J substitute(const Mat3J& p, const Vec3J& dx) {
  Mat3J r;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) r(j, i) = r(i, j) = substitute(p(i, j), dx);
  return r;
}

bool is_seed(const Vec3J& x) {
  for (int a = 0; a < 3; ++a)
    for (int m = 1; m < 20; ++m)
      if (x[a].c[m] != ((m == 1 + a) ? 1.0 : 0.0)) return false;
  return true;
}

// Centred second-order Taylor coefficients of f around 0 from samples f(h * offset).
template <typename V, typename F>
std::array<V, 20> fd_coefficients(F&& f, double h) {
  using jet_detail::index_of;
  std::array<V, 20> c;
  auto at = [&](int a, int b, int d) { return f(Vec3(a * h, b * h, d * h)); };
  V f0 = at(0, 0, 0);
  c[0] = f0;
  int e[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  V fp[3], fm[3];
  for (int i = 0; i < 3; ++i) {
    fp[i] = at(e[i][0], e[i][1], e[i][2]);
    fm[i] = at(-e[i][0], -e[i][1], -e[i][2]);
    V fp2 = at(2 * e[i][0], 2 * e[i][1], 2 * e[i][2]);
    V fm2 = at(-2 * e[i][0], -2 * e[i][1], -2 * e[i][2]);
    c[1 + i] = (fp[i] - fm[i]) / (2 * h);
    c[index_of(2 * e[i][0], 2 * e[i][1], 2 * e[i][2])] = (fp[i] - 2.0 * f0 + fm[i]) / (2 * h * h);
    c[index_of(3 * e[i][0], 3 * e[i][1], 3 * e[i][2])] = (fp2 - 2.0 * fp[i] + 2.0 * fm[i] - fm2) / (12 * h * h * h);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      int s[3];
      auto corner = [&](int si, int sj) {
        for (int a = 0; a < 3; ++a) s[a] = si * e[i][a] + sj * e[j][a];
        return at(s[0], s[1], s[2]);
      };
      V fpp = corner(1, 1), fpm = corner(1, -1), fmp = corner(-1, 1), fmm = corner(-1, -1);
      c[index_of(e[i][0] + e[j][0], e[i][1] + e[j][1], e[i][2] + e[j][2])] = (fpp - fpm - fmp + fmm) / (4 * h * h);
      // d_iij: second difference along i of the centred first difference along j; and symmetric.
      V dj_p = (fpp - fpm) / (2 * h), dj_0 = (fp[j] - fm[j]) / (2 * h), dj_m = (fmp - fmm) / (2 * h);
      c[index_of(2 * e[i][0] + e[j][0], 2 * e[i][1] + e[j][1], 2 * e[i][2] + e[j][2])] =
          (dj_p - 2.0 * dj_0 + dj_m) / (2 * h * h);
      V di_p = (fpp - fmp) / (2 * h), di_0 = (fp[i] - fm[i]) / (2 * h), di_m = (fpm - fmm) / (2 * h);
      c[index_of(e[i][0] + 2 * e[j][0], e[i][1] + 2 * e[j][1], e[i][2] + 2 * e[j][2])] =
          (di_p - 2.0 * di_0 + di_m) / (2 * h * h);
    }
  V sum = at(1, 1, 1) - at(1, 1, -1) - at(1, -1, 1) + at(1, -1, -1) - at(-1, 1, 1) + at(-1, 1, -1) +
          at(-1, -1, 1) - at(-1, -1, -1);
  c[index_of(1, 1, 1)] = sum / (8 * h * h * h);
  return c;
}

Mat3J jet_from_coefficients(const std::array<Mat3, 20>& c) {
  Mat3J r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 20; ++m) r(i, j).c[m] = c[m](i, j);
  return r;
}

}  // namespace

MetricField fd_view(const MetricField& g, double h) {
  MetricField r = g;
  r.grid = true;
  auto local = [g, h](const Vec3& p) {
    return jet_from_coefficients(fd_coefficients<Mat3>([&](const Vec3& d) { return g.value_fn(p + d); }, h));
  };
  r.jet_fn = [local](const Vec3J& x) {
    Vec3 p = values(x);
    Mat3J j = local(p);
    if (is_seed(x)) return j;
    Vec3J dx = x;
    for (int a = 0; a < 3; ++a) dx[a].c[0] = 0.0;
    return substitute(j, dx);
  };
  r.label = "fd(" + g.label + ")";
  return r;
}

namespace {

struct LatticeData {
  Lattice lat;
  std::vector<Mat3> samples;
  std::vector<Mat3J> jets;
};

template <typename V>
V trilinear(const Lattice& lat, const std::vector<V>& data, const Vec3& p, V zero) {
  Vec3 s = (p - lat.origin) / lat.h;
  int i0[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    if (s[a] < -1e-9 || s[a] > lat.n[a] - 1 + 1e-9) throw std::out_of_range("point outside lattice");
    i0[a] = std::clamp(static_cast<int>(std::floor(s[a])), 0, lat.n[a] - 2);
    t[a] = s[a] - i0[a];
  }
  V acc = zero;
  for (int c = 0; c < 8; ++c) {
    int d0 = c >> 2 & 1, d1 = c >> 1 & 1, d2 = c & 1;
    double w = (d0 ? t[0] : 1 - t[0]) * (d1 ? t[1] : 1 - t[1]) * (d2 ? t[2] : 1 - t[2]);
    if (w == 0.0) continue;
    acc = acc + data[lat.index(i0[0] + d0, i0[1] + d1, i0[2] + d2)] * w;
  }
  return acc;
}

}  // namespace

MetricField grid_metric(Chart chart, const Lattice& lat, std::vector<Mat3> samples) {
  auto d = std::make_shared<LatticeData>();
  d->lat = lat;
  d->samples = std::move(samples);
  if (static_cast<Eigen::Index>(d->samples.size()) != lat.size())
    throw std::invalid_argument("grid metric sample count does not match lattice");
  d->jets.resize(d->samples.size());
  for (int i = 0; i < lat.n[0]; ++i)
    for (int j = 0; j < lat.n[1]; ++j)
      for (int k = 0; k < lat.n[2]; ++k) {
        auto node = [&](const Vec3& off) {
          int ii = std::clamp(i + static_cast<int>(std::lround(off[0] / lat.h)), 0, lat.n[0] - 1);
          int jj = std::clamp(j + static_cast<int>(std::lround(off[1] / lat.h)), 0, lat.n[1] - 1);
          int kk = std::clamp(k + static_cast<int>(std::lround(off[2] / lat.h)), 0, lat.n[2] - 1);
          return d->samples[lat.index(ii, jj, kk)];
        };
        d->jets[lat.index(i, j, k)] = jet_from_coefficients(fd_coefficients<Mat3>(node, lat.h));
      }
  MetricField g;
  g.chart = std::move(chart);
  g.grid = true;
  g.value_fn = [d](const Vec3& p) { return trilinear<Mat3>(d->lat, d->samples, p, Mat3::Zero()); };
  g.jet_fn = [d](const Vec3J& x) {
    Vec3 p = values(x);
    Mat3J zero;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) zero(i, j) = JetD(0.0);
    Mat3J j = trilinear<Mat3J>(d->lat, d->jets, p, zero);
    if (is_seed(x)) return j;
    Vec3J dx = x;
    for (int a = 0; a < 3; ++a) dx[a].c[0] = 0.0;
    return substitute(j, dx);
  };
  g.label = "grid";
  return g;
}

MetricField sample_on_lattice(const MetricField& g, const Lattice& lat) {
  std::vector<Mat3> s(lat.size());
  for (int i = 0; i < lat.n[0]; ++i)
    for (int j = 0; j < lat.n[1]; ++j)
      for (int k = 0; k < lat.n[2]; ++k) s[lat.index(i, j, k)] = g(lat.point(i, j, k));
  MetricField r = grid_metric(g.chart, lat, std::move(s));
  r.label = "grid(" + g.label + ")";
  return r;
}

void check_in_chart(const Chart& c, const Points& pts) {
  for (Eigen::Index k = 0; k < pts.cols(); ++k)
    if (!c.contains(pts.col(k))) {
      std::ostringstream os;
      os << "point " << pts.col(k).transpose() << " outside chart " << c.name;
      throw std::out_of_range(os.str());
    }
}

std::vector<Mat3> evaluate(const MetricField& g, const Points& pts) {
  check_in_chart(g.chart, pts);
  std::vector<Mat3> out(pts.cols());
  parallel_for(pts.cols(), [&](long k) { out[k] = g(pts.col(k)); });
  return out;
}

Eigen::VectorXd evaluate(const ScalarField& f, const Points& pts) {
  check_in_chart(f.chart, pts);
  Eigen::VectorXd out(pts.cols());
  parallel_for(pts.cols(), [&](long k) { out[k] = f(pts.col(k)); });
  return out;
}

}  // namespace aegeo
