#pragma once

#include "aegeo/fields.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace aegeo {

struct WeightedNormSpec {
  int k = 0;
  double p = 2.0;
  double delta = -0.5;
  void validate() const;
};

struct WeightedNorm {
  double value = 0.0;
  double tail_estimate = 0.0;  // estimated p-th power mass beyond the chart, as a norm increment
  bool divergence_flag = false;
  bool exceptional_weight = false;  // delta is an integer
  std::vector<double> shell_radii;  // inner radius of each panel
  std::vector<double> shell_contributions;
};

// Component jets of a tensor field (any number of components).
using JetComponents = std::function<std::vector<JetD>(const Vec3J&)>;

// k = 0 only: f must carry values at chart.nodes().
WeightedNorm weighted_norm(const TensorField& f, const WeightedNormSpec& spec);
WeightedNorm weighted_norm(const Chart& chart, const JetComponents& f, const WeightedNormSpec& spec);
WeightedNorm weighted_norm(const Chart& chart, const std::function<double(const Vec3&)>& pointwise_norm,
                           const WeightedNormSpec& spec);
// The p = 1 endpoint, k = 0.
WeightedNorm weighted_l1_norm(const Chart& chart, const std::function<double(const Vec3&)>& f, double delta);

struct DecayFit {
  double exponent = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;
  std::vector<double> radii;
  std::vector<double> log_sup;
  std::vector<double> per_derivative;
  bool vanishing = false;  // some shell sup was zero: exponent is +inf
};

// Least-squares slope of log(sup) against log(r). Values <= floor count as zero.
DecayFit decay_fit(const std::vector<double>& radii, const std::vector<double>& sup, double floor = 0.0);
// Sup over sphere nodes of a pointwise norm.
DecayFit decay_fit(const std::function<double(const Vec3&)>& pointwise_norm, const std::vector<double>& radii,
                   const SphereRule& sphere, double floor = 0.0);
// Nodes of f are grouped by radius; needs >= 4 radii.
DecayFit decay_fit(const TensorField& f, const std::vector<double>& radii);

Points shell_nodes(const std::vector<double>& radii, const SphereRule& sphere);

struct CottonAdmissibility {
  double p1 = 0.0;
  bool admissible = false;
  double norm = 0.0;
  WeightedNorm detail;
};

CottonAdmissibility cotton_admissible(const MetricField& g, double sigma_weight);
CottonAdmissibility cotton_admissible(const MetricField& g, double sigma_weight, const Chart& chart);

CoordinateMap kelvin_map(const Chart& source, const Chart& target);

template <typename S>
Vector3<S> kelvin(const Vector3<S>& p) {
  S r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  return Vector3<S>(p[0] / r2, p[1] / r2, p[2] / r2);
}

template <typename S>
Matrix3<S> kelvin_jacobian(const Vector3<S>& p) {
  S r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  S r4 = r2 * r2;
  Matrix3<S> j;
  for (int u = 0; u < 3; ++u)
    for (int a = 0; a < 3; ++a) j(u, a) = ((u == a ? r2 : S(0.0)) - 2.0 * p[u] * p[a]) / r4;
  return j;
}

struct MapClassification {
  std::string leading = "identity";
  double alpha = std::numeric_limits<double>::infinity();
  double residual = 0.0;
  double amplitude = 0.0;
  bool compatible = false;
  DecayFit displacement, jacobian;
};

MapClassification classify_map(const CoordinateMap& map, const std::vector<double>& radii,
                               const SphereRule& sphere = SphereRule(12));

// Variable-projection fit of y(r) = a / r + b r^(-1-beta), beta in (0, beta_max].
struct MonopoleFit {
  double a = 0.0, b = 0.0, beta = 0.0, rms = 0.0;
};
MonopoleFit fit_monopole(const std::vector<double>& r, const std::vector<double>& y, double beta_max = 3.0);

// Least-squares polynomial a0 + a1 t + a2 t^2 (+...) in t; returns a0.
double extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& y, int order = 2);

}  // namespace aegeo
