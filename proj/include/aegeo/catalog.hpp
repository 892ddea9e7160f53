#pragma once

#include "aegeo/fields.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace aegeo {

template <typename S>
S sigma(const Vector3<S>& z) {
  using std::sqrt;
  return sqrt(S(1.0) + z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
}

template <typename S>
Matrix3<S> scaled_identity(const S& s) {
  Matrix3<S> m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = i == j ? s : S(0.0);
  return m;
}

// Fixed traceless off-diagonal matrix used by the anisotropic families.
inline Mat3 perturbation_q() {
  Mat3 q;
  q << 1.0, 0.5, 0.0, 0.5, -1.0, 0.25, 0.0, 0.25, 0.0;
  return q;
}

struct Euclidean {
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>&) const { return scaled_identity(S(1.0)); }
};

// u^4 delta with u = 1 + C / sigma(z - c).
struct ConformallyFlatAE {
  double C = 0.5;
  Vec3 c = Vec3::Zero();
  template <typename S>
  S u(const Vector3<S>& z) const {
    Vector3<S> d = z;
    for (int i = 0; i < 3; ++i) d[i] = d[i] - c[i];
    return S(1.0) + C / sigma(d);
  }
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& z) const {
    S w = u(z);
    w = w * w;
    return scaled_identity(S(w * w));
  }
};

// (1 + A / sigma) delta + eps Q / sigma^2.
struct FirstOrderSchwarzschildian {
  double A = 1.0, eps = 0.0;
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& z) const {
    S s = sigma(z);
    Matrix3<S> m = scaled_identity(S(1.0 + A / s));
    if (eps != 0.0) {
      Mat3 q = perturbation_q();
      S w = eps / (s * s);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = m(i, j) + w * q(i, j);
    }
    return m;
  }
};

// (1 + a s)^4 delta on the torus of period L, s = exp(-3 + sum cos(2 pi x_k / L)).
struct TorusConformal {
  double a = 0.1, L = 1.0;
  template <typename S>
  S bump(const Vector3<S>& x) const {
    using std::cos; using std::exp;
    const double k = 2.0 * std::numbers::pi / L;
    return exp(S(-3.0) + cos(x[0] * k) + cos(x[1] * k) + cos(x[2] * k));
  }
  template <typename S>
  Matrix3<S> operator()(const Vector3<S>& x) const {
    S w = S(1.0) + a * bump(x);
    w = w * w;
    return scaled_identity(S(w * w));
  }
};

enum class Family { euclidean, conformally_flat_ae, conformally_flat_translated, first_order_schwarzschildian,
                    torus_conformal };

Family parse_family(const std::string& name);
const char* to_string(Family f);
Chart default_chart(Family f);

// Throws std::invalid_argument for an unknown family or bad params, std::domain_error for
// a metric that fails the positive-definite scan.
MetricField make_catalog_metric(Family f, const std::vector<double>& params);
MetricField make_catalog_metric(Family f, const std::vector<double>& params, const Chart& chart);
MetricField make_catalog_metric(const std::string& family, const std::vector<double>& params);

}  // namespace aegeo
