#pragma once

#include "aegeo/chart.hpp"
#include "aegeo/jet.hpp"

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aegeo {

template <typename S> using Vector3 = Eigen::Matrix<S, 3, 1>;
template <typename S> using Matrix3 = Eigen::Matrix<S, 3, 3>;
using Vec3J = Vector3<JetD>;
using Mat3J = Matrix3<JetD>;

inline Vec3J seed(const Vec3& p) {
  Vec3J x;
  for (int i = 0; i < 3; ++i) x[i] = JetD::variable(p[i], i);
  return x;
}

inline Vec3 values(const Vec3J& x) { return {x[0].value(), x[1].value(), x[2].value()}; }
inline Mat3 values(const Mat3J& m) {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m(i, j).value();
  return r;
}

template <typename S>
S det3(const Matrix3<S>& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

template <typename S>
Matrix3<S> inv3(const Matrix3<S>& a) {
  Matrix3<S> c;
  c(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  c(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
  c(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  c(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  c(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  c(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
  c(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  c(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
  c(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  S d = a(0, 0) * c(0, 0) + a(0, 1) * c(1, 0) + a(0, 2) * c(2, 0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = c(i, j) / d;
  return c;
}

template <typename S>
S norm3(const Vector3<S>& v) {
  using std::sqrt;
  return sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// Scalar field with a value path and a jet path.
struct ScalarField {
  Chart chart;
  std::function<double(const Vec3&)> value_fn;
  std::function<JetD(const Vec3J&)> jet_fn;
  std::string label;

  double operator()(const Vec3& p) const { return value_fn(p); }
  JetD jet(const Vec3& p) const { return jet_fn(seed(p)); }
  JetD jet(const Vec3J& x) const { return jet_fn(x); }
};

template <typename F>
ScalarField make_scalar(Chart chart, F f, std::string label = {}) {
  return {std::move(chart), [f](const Vec3& p) { return f(p); }, [f](const Vec3J& x) { return f(x); },
          std::move(label)};
}

// Symmetric positive-definite 3x3 field.
struct MetricField {
  Chart chart;
  std::function<Mat3(const Vec3&)> value_fn;
  std::function<Mat3J(const Vec3J&)> jet_fn;
  std::optional<double> decay_tag;
  std::string label;
  bool grid = false;

  Mat3 operator()(const Vec3& p) const { return value_fn(p); }
  Mat3J jet(const Vec3& p) const { return jet_fn(seed(p)); }
  Mat3J jet(const Vec3J& x) const { return jet_fn(x); }
};

template <typename F>
MetricField make_metric(Chart chart, F f, std::string label = {}) {
  MetricField g;
  g.chart = std::move(chart);
  g.value_fn = [f](const Vec3& p) { return Mat3(f(p)); };
  g.jet_fn = [f](const Vec3J& x) { return Mat3J(f(x)); };
  g.label = std::move(label);
  return g;
}

// Smallest eigenvalue over the chart nodes; throws when not positive or not symmetric.
void require_spd(const MetricField& g, const Points& nodes);

// Covariant / contravariant rank and components (3^rank rows) at nodes.
struct TensorField {
  Chart chart;
  int covariant = 0, contravariant = 0;
  Points nodes;
  Eigen::MatrixXd components;

  int rank() const { return covariant + contravariant; }
  void validate() const;
};

// Map from source-chart coordinates to target-chart coordinates.
// jacobian(p)(u, a) = d target^u / d source^a.
struct CoordinateMap {
  Chart source, target;
  std::function<Vec3(const Vec3&)> forward_fn;
  std::function<Vec3J(const Vec3J&)> forward_jet;
  std::function<Mat3(const Vec3&)> jacobian_fn;
  std::function<Mat3J(const Vec3J&)> jacobian_jet;
  std::function<Vec3(const Vec3&)> backward_fn;
  std::function<std::pair<Vec3J, Mat3J>(const Vec3J&)> both_jet;  // optional fused forward + jacobian
  struct Classification {
    std::string leading;
    double correction_exponent;
  };
  std::optional<Classification> classification;
  std::string label;

  Vec3 operator()(const Vec3& p) const { return forward_fn(p); }
  Mat3 jacobian(const Vec3& p) const { return jacobian_fn(p); }
  std::pair<Vec3J, Mat3J> jets(const Vec3J& x) const {
    if (both_jet) return both_jet(x);
    return {forward_jet(x), jacobian_jet(x)};
  }
};

template <typename F, typename J>
CoordinateMap make_map(Chart source, Chart target, F f, J jac, std::string label = {}) {
  CoordinateMap m;
  m.source = std::move(source);
  m.target = std::move(target);
  m.forward_fn = [f](const Vec3& p) { return Vec3(f(p)); };
  m.forward_jet = [f](const Vec3J& x) { return Vec3J(f(x)); };
  m.jacobian_fn = [jac](const Vec3& p) { return Mat3(jac(p)); };
  m.jacobian_jet = [jac](const Vec3J& x) { return Mat3J(jac(x)); };
  m.label = std::move(label);
  return m;
}

CoordinateMap identity_map(const Chart& c);
// a then b: p -> b(a(p)).
CoordinateMap compose(const CoordinateMap& b, const CoordinateMap& a);
// Newton inverse of m; guess maps target points to a starting source point.
CoordinateMap inverse_map(const CoordinateMap& m, std::function<Vec3(const Vec3&)> guess = {});

MetricField pullback(const MetricField& g, const CoordinateMap& m);
// f^4 g on the same chart.
MetricField conformal(const MetricField& g, const ScalarField& f);
ScalarField pullback(const ScalarField& f, const CoordinateMap& m);

// Metric with jets from centred second-order differences of g's values on a lattice of spacing h.
MetricField fd_view(const MetricField& g, double h);

// Samples on a uniform lattice (origin, spacing, dims); values by trilinear interpolation,
// jets by centred differences at lattice nodes interpolated trilinearly.
struct Lattice {
  Vec3 origin;
  double h;
  int n[3];
  Eigen::Index size() const { return Eigen::Index(n[0]) * n[1] * n[2]; }
  Eigen::Index index(int i, int j, int k) const { return (Eigen::Index(i) * n[1] + j) * n[2] + k; }
  Vec3 point(int i, int j, int k) const { return origin + h * Vec3(i, j, k); }
};
MetricField grid_metric(Chart chart, const Lattice& lat, std::vector<Mat3> samples);
MetricField sample_on_lattice(const MetricField& g, const Lattice& lat);

std::vector<Mat3> evaluate(const MetricField& g, const Points& pts);
Eigen::VectorXd evaluate(const ScalarField& f, const Points& pts);

void check_in_chart(const Chart& c, const Points& pts);

}  // namespace aegeo
