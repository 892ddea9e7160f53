#pragma once

// Planted metrics and closed-form oracles shared by the unit and acceptance tests.

#include "aegeo/catalog.hpp"
#include "aegeo/fields.hpp"

#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using aegeo::Mat3;
using aegeo::Matrix3;
using aegeo::Vec3;
using aegeo::Vector3;

inline constexpr double pi = 3.14159265358979323846;

template <typename S>
S radius(const Vector3<S>& z) {
  using std::sqrt;
  return sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
}

// delta + eps Q / sigma^(tau - 3): Cotton decays like |z|^-tau.
struct PlantedCotton {
  double tau = 5.0, eps = 0.2;
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& z) const {
    using std::pow;
    S w = eps / pow(aegeo::sigma(z), tau - 3.0);
    Mat3 q = aegeo::perturbation_q();
    Matrix3<S> m = aegeo::scaled_identity(S(1.0));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = m(i, j) + w * q(i, j);
    return m;
  }
};

// (1 + A / |z|) delta.
struct PlantedRadial {
  double A = 1.0;
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& z) const {
    return aegeo::scaled_identity(S(1.0 + A / radius(z)));
  }
};

// (1 + A / sigma + B z^1 / sigma^2) delta: the odd part decays only like 1/r.
struct PlantedOddSlow {
  double A = 1.0, B = 0.5;
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& z) const {
    S s = aegeo::sigma(z);
    return aegeo::scaled_identity(S(1.0 + A / s + B * z[0] / (s * s)));
  }
};

// u^4 delta with u = 1 + kappa ln(sigma) / sigma, so R_g ~ 8 kappa / r^3.
struct PlantedLogConformal {
  double kappa = 0.5;
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& z) const {
    using std::log;
    S s = aegeo::sigma(z);
    S u = 1.0 + kappa * log(s) / s;
    u = u * u;
    return aegeo::scaled_identity(S(u * u));
  }
};

// psi^4 delta with psi = 1 + a exp(-|x|^2).
struct GaussianConformal {
  double a = 0.1;
  template <typename S>
  S psi(const Vector3<S>& x) const {
    using std::exp;
    return 1.0 + a * exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
  }
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& x) const {
    S p = psi(x);
    p = p * p;
    return aegeo::scaled_identity(S(p * p));
  }
};

// A non-conformally-flat smooth metric on a box around 0.
struct SmoothPerturbation {
  double a = 0.1;
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& x) const {
    using std::exp;
    S e = exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
    Matrix3<S> m = aegeo::scaled_identity(S(1.0) + a * x[0] * x[1] * e);
    m(0, 1) = a * 0.5 * x[2] * x[2] * e;
    m(1, 0) = m(0, 1);
    m(2, 2) = m(2, 2) + a * x[0] * x[0] * e;
    return m;
  }
};

inline double planted_u(double r) { return 1.0 + 0.3 / r + 0.2 / std::pow(r, 1.4); }

// Conformally flat AE u = 1 + C / sigma, and its radial derivative.
inline double cf_u(double C, double r) { return 1.0 + C / std::sqrt(1.0 + r * r); }
inline double cf_du(double C, double r) { return -C * r / std::pow(1.0 + r * r, 1.5); }

// Flux E_r = (1 / 16 pi) oint (d_i g_ij - d_j g_ii) nu^j dS for u^4 delta with radial u.
inline double cf_energy_partial(double C, double r) {
  double u = cf_u(C, r);
  return -2.0 * r * r * u * u * u * cf_du(C, r);
}

// Truncated mass integral (1 / 32 pi) (-8) oint_R du/dr dS = -R^2 u'(R).
inline double cf_mass_truncated(double C, double R) { return -R * R * cf_du(C, R); }

// Gamma^k_ij for psi^4 delta given grad ln psi.
inline std::array<Mat3, 3> conformal_christoffel(const Vec3& dlnpsi) {
  std::array<Mat3, 3> g;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        g[k](i, j) = 2.0 * ((k == i) * dlnpsi[j] + (k == j) * dlnpsi[i] - (i == j) * dlnpsi[k]);
  return g;
}

// Leading Ricci of (1 + A/|z|) delta under R^i_jkl = d_k Gamma^i_lj - ..., Ric_ij = R^l_ilj.
inline Mat3 schwarzschild_ricci(double A, const Vec3& z) {
  double r = z.norm();
  return 0.5 * A * (Mat3::Identity() / std::pow(r, 3) - 3.0 * z * z.transpose() / std::pow(r, 5));
}

// sqrt(4 pi int_a^b sigma^-2 dr): the (k=0, p=2, delta=-1/2) norm of 1/|z| on [a, b].
inline double inverse_r_norm(double a, double b) { return std::sqrt(4.0 * pi * (std::atan(b) - std::atan(a))); }

// Brute-force midpoint sphere quadrature of a vector integrand; returns sum f dS.
template <typename F>
Vec3 sphere_midpoint(double r, int nt, F&& f) {
  Vec3 acc = Vec3::Zero();
  const int np = 2 * nt;
  for (int a = 0; a < nt; ++a) {
    double th = pi * (a + 0.5) / nt;
    for (int b = 0; b < np; ++b) {
      double ph = 2.0 * pi * (b + 0.5) / np;
      Vec3 n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
      acc += f(n) * (r * r * std::sin(th) * (pi / nt) * (2.0 * pi / np));
    }
  }
  return acc;
}

// Centre of mass of u^4 delta with u = 1 + C / sigma(z - c), by midpoint quadrature at radius R.
inline Vec3 translated_com_partial(double C, const Vec3& c, double R, int nt = 200) {
  auto u4 = [&](const Vec3& z) { return std::pow(cf_u(C, (z - c).norm()), 4); };
  auto grad_u4 = [&](const Vec3& z) {
    double d = (z - c).norm();
    double u = cf_u(C, d);
    return Vec3(4.0 * u * u * u * (-C / std::pow(1.0 + d * d, 1.5)) * (z - c));
  };
  double e = sphere_midpoint(R, nt, [&](const Vec3& n) {
               Vec3 z = R * n;
               return Vec3(-2.0 * grad_u4(z).dot(n), 0.0, 0.0);
             })[0] / (16.0 * pi);
  Vec3 num = sphere_midpoint(R, nt, [&](const Vec3& n) {
    Vec3 z = R * n;
    return Vec3(-2.0 * grad_u4(z).dot(n) * z + 2.0 * u4(z) * n);
  });
  return num / (16.0 * pi * e);
}

inline std::vector<Vec3> random_points(int n, double rmin, double rmax, unsigned seed = 7) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(rmin, rmax);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    Vec3 v(nd(rng), nd(rng), nd(rng));
    out.push_back(ud(rng) * v.normalized());
  }
  return out;
}

}  // namespace oracle
