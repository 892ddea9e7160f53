#include "aegeo/curvature.hpp"

#include "aegeo/elliptic.hpp"
#include "aegeo/parallel.hpp"

#include <stdexcept>

namespace aegeo {

namespace {

using GammaJ = std::array<Mat3J, 3>;

struct JetCurvature {
  Mat3J g, ginv;
  GammaJ gamma;
  std::array<std::array<Mat3J, 3>, 3> riemann;
  Mat3J ricci;
  JetD scalar;
};

GammaJ christoffel_jets(const Mat3J& g, const Mat3J& gi) {
  std::array<Mat3J, 3> dg;
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) dg[b](j, i) = dg[b](i, j) = g(i, j).partial(b);
  // lowered[b](i, j) = (d_i g_bj + d_j g_bi - d_b g_ij) / 2
  std::array<Mat3J, 3> low;
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) low[b](j, i) = low[b](i, j) = (dg[i](b, j) + dg[j](b, i) - dg[b](i, j)) * 0.5;
  GammaJ gam;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        JetD s = gi(k, 0) * low[0](i, j) + gi(k, 1) * low[1](i, j) + gi(k, 2) * low[2](i, j);
        gam[k](i, j) = s;
        gam[k](j, i) = s;
      }
  return gam;
}

JetCurvature jet_curvature(const Mat3J& g) {
  JetCurvature c;
  c.g = g;
  c.ginv = inv3<JetD>(g);
  c.gamma = christoffel_jets(g, c.ginv);
  // dgam[m][i](l, j) = d_m Gamma^i_lj
  std::array<std::array<Mat3J, 3>, 3> dgam;
  for (int m = 0; m < 3; ++m)
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l)
        for (int j = l; j < 3; ++j) dgam[m][i](j, l) = dgam[m][i](l, j) = c.gamma[i](l, j).partial(m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        c.riemann[i][j](k, k) = JetD(0.0);
        for (int l = k + 1; l < 3; ++l) {
          JetD r = dgam[k][i](l, j) - dgam[l][i](k, j);
          for (int u = 0; u < 3; ++u) r += c.gamma[i](k, u) * c.gamma[u](j, l) - c.gamma[i](l, u) * c.gamma[u](j, k);
          c.riemann[i][j](k, l) = r;
          c.riemann[i][j](l, k) = -r;
        }
      }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      JetD s = c.riemann[0][i](0, j) + c.riemann[1][i](1, j) + c.riemann[2][i](2, j);
      c.ricci(i, j) = s;
    }
  JetD r(0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r += c.ginv(i, j) * c.ricci(i, j);
  c.scalar = r;
  return c;
}

Mat3 value3(const Mat3J& m) { return values(m); }

}  // namespace

Christoffel christoffel_at(const MetricField& g, const Vec3& p) {
  Mat3J gj = g.jet(p);
  GammaJ gam = christoffel_jets(gj, inv3<JetD>(gj));
  Christoffel out;
  for (int k = 0; k < 3; ++k) out[k] = value3(gam[k]);
  return out;
}

PointCurvature curvature_at(const MetricField& g, const Vec3& p) {
  JetCurvature c = jet_curvature(g.jet(p));
  PointCurvature out;
  out.g = value3(c.g);
  for (int k = 0; k < 3; ++k) out.gamma[k] = value3(c.gamma[k]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.riemann[i][j] = value3(c.riemann[i][j]);
  out.ricci = value3(c.ricci);
  out.scalar = c.scalar.value();
  for (int k = 0; k < 3; ++k) out.dscalar[k] = c.scalar.d(k);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double v = c.ricci(i, j).d(k);
        for (int m = 0; m < 3; ++m) v -= out.gamma[m](k, i) * out.ricci(m, j) + out.gamma[m](k, j) * out.ricci(i, m);
        out.dricci[k](i, j) = v;
      }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      out.cotton[i](j, j) = 0.0;
      for (int k = j + 1; k < 3; ++k) {
        double v = out.dricci[k](i, j) - out.dricci[j](i, k) +
                   0.25 * (out.dscalar[j] * out.g(i, k) - out.dscalar[k] * out.g(i, j));
        out.cotton[i](j, k) = v;
        out.cotton[i](k, j) = -v;
      }
    }
  return out;
}

double scalar_curvature_at(const MetricField& g, const Vec3& p) { return jet_curvature(g.jet(p)).scalar.value(); }

JetD scalar_curvature_jet(const MetricField& g, const Vec3J& x) { return jet_curvature(g.jet(x)).scalar; }

namespace {

Mat3 einstein_value(const JetCurvature& c) {
  Mat3 G;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) G(i, j) = (c.ricci(i, j) - c.scalar * c.g(i, j) * 0.5).value();
  return G;
}

Vec3 divergence(const Mat3& gv, const std::array<Mat3, 3>& dG, const Mat3& gi, const Christoffel& gam) {
  Vec3 out = Vec3::Zero();
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i) {
        double nab = dG[k](i, j);
        for (int m = 0; m < 3; ++m) nab -= gam[m](k, i) * gv(m, j) + gam[m](k, j) * gv(i, m);
        out[j] += gi(k, i) * nab;
      }
  return out;
}

}  // namespace

Vec3 schur_covector_at(const MetricField& g, const Vec3& p) {
  JetCurvature c = jet_curvature(g.jet(p));
  std::array<Mat3, 3> dG;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dG[k](i, j) = (c.ricci(i, j) - c.scalar * c.g(i, j) * 0.5).d(k);
  Christoffel gam;
  for (int k = 0; k < 3; ++k) gam[k] = value3(c.gamma[k]);
  return divergence(einstein_value(c), dG, value3(c.ginv), gam);
}

// Grid path: Ric - R g / 2 from FD metric jets at p and p +- h e_k, outer derivative by centred differences.
static Vec3 schur_covector_fd(const MetricField& g, const Vec3& p, double h) {
  MetricField m = fd_view(g, h);
  JetCurvature c = jet_curvature(m.jet(p));
  std::array<Mat3, 3> dG;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Unit(k) * h;
    dG[k] = (einstein_value(jet_curvature(m.jet(Vec3(p + e)))) - einstein_value(jet_curvature(m.jet(Vec3(p - e))))) /
            (2.0 * h);
  }
  Christoffel gam;
  for (int k = 0; k < 3; ++k) gam[k] = value3(c.gamma[k]);
  return divergence(einstein_value(c), dG, value3(c.ginv), gam);
}

namespace {

TensorField make_tensor(const MetricField& g, const Points& nodes, int cov, int contra) {
  TensorField t;
  t.chart = g.chart;
  t.covariant = cov;
  t.contravariant = contra;
  t.nodes = nodes;
  Eigen::Index rows = 1;
  for (int i = 0; i < cov + contra; ++i) rows *= 3;
  t.components.setZero(rows, nodes.cols());
  return t;
}

}  // namespace

TensorField christoffel(const MetricField& g, const Points& nodes) {
  TensorField t = make_tensor(g, nodes, 2, 1);
  parallel_for(nodes.cols(), [&](long n) {
    Christoffel c = christoffel_at(g, nodes.col(n));
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t.components(k * 9 + i * 3 + j, n) = c[k](i, j);
  });
  return t;
}

CurvatureBundle curvature_bundle(const MetricField& g, const Points& nodes) {
  CurvatureBundle b;
  b.gamma = make_tensor(g, nodes, 2, 1);
  b.riemann = make_tensor(g, nodes, 3, 1);
  b.ricci = make_tensor(g, nodes, 2, 0);
  b.scalar = make_tensor(g, nodes, 0, 0);
  b.cotton = make_tensor(g, nodes, 3, 0);
  parallel_for(nodes.cols(), [&](long n) {
    PointCurvature c = curvature_at(g, nodes.col(n));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        b.ricci.components(i * 3 + j, n) = c.ricci(i, j);
        for (int k = 0; k < 3; ++k) {
          b.gamma.components(i * 9 + j * 3 + k, n) = c.gamma[i](j, k);
          b.cotton.components(i * 9 + j * 3 + k, n) = c.cotton[i](j, k);
          for (int l = 0; l < 3; ++l) b.riemann.components(i * 27 + j * 9 + k * 3 + l, n) = c.riemann[i][j](k, l);
        }
      }
    b.scalar.components(0, n) = c.scalar;
  });
  return b;
}

TensorField cotton(const MetricField& g, const Points& nodes) { return curvature_bundle(g, nodes).cotton; }

TensorField ricci(const MetricField& g, const Points& nodes) {
  TensorField t = make_tensor(g, nodes, 2, 0);
  parallel_for(nodes.cols(), [&](long n) {
    Mat3 r = value3(jet_curvature(g.jet(Vec3(nodes.col(n)))).ricci);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t.components(i * 3 + j, n) = r(i, j);
  });
  return t;
}

TensorField scalar_curvature(const MetricField& g, const Points& nodes) {
  TensorField t = make_tensor(g, nodes, 0, 0);
  parallel_for(nodes.cols(), [&](long n) { t.components(0, n) = scalar_curvature_at(g, nodes.col(n)); });
  return t;
}

Eigen::VectorXd conformal_scalar(const MetricField& g, const ScalarField& u, const Points& nodes) {
  Eigen::VectorXd out(nodes.cols());
  for (Eigen::Index n = 0; n < nodes.cols(); ++n) {
    Vec3 p = nodes.col(n);
    double uv = u(p);
    if (!(uv > 0.0)) throw std::domain_error("conformal_scalar: u must be positive");
    double lap = laplacian_at(g, u, p);
    out[n] = std::pow(uv, -5.0) * (-8.0 * lap + scalar_curvature_at(g, p) * uv);
  }
  return out;
}

double schur_residual(const MetricField& g, const Points& nodes, double h) {
  std::vector<double> sup(nodes.cols());
  parallel_for(nodes.cols(), [&](long n) {
    Vec3 p = nodes.col(n);
    sup[n] = (h > 0.0 ? schur_covector_fd(g, p, h) : schur_covector_at(g, p)).cwiseAbs().maxCoeff();
  });
  double s = 0.0;
  for (double v : sup) s = std::max(s, v);
  return s;
}

}  // namespace aegeo
