#pragma once

#include "aegeo/asymptotics.hpp"
#include "aegeo/charges.hpp"
#include "aegeo/elliptic.hpp"
#include "aegeo/fields.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace aegeo {

// A pipeline stage refused its input; hypothesis names the violated assumption.
struct StageError : std::runtime_error {
  std::string stage, hypothesis;
  StageError(std::string stage, std::string hypothesis, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage(std::move(stage)), hypothesis(std::move(hypothesis)) {}
};

// phi(r) = 1/R0 for r <= R0, 1/r for r >= R1, quintic bridge in between.
template <typename S>
S compactifying_factor(const S& r, double R0, double R1) {
  double rv = value_of(r);
  if (rv <= R0) return S(1.0 / R0);
  if (rv >= R1) return 1.0 / r;
  S t = (r - R0) / (R1 - R0);
  S s = t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
  return (1.0 - s) * (1.0 / R0) + s / r;
}

struct CompactificationResult {
  MetricField g_hat;  // on the inverted x chart
  ScalarField phi;    // on the z chart
  double R0 = 0.0, R1 = 0.0;
  Mat3 g_hat_at_pinf = Mat3::Identity();  // extrapolated
  double pinf_defect = 0.0;
  double phi_tilde_at_pinf = 1.0;         // phi |z| at infinity
  double decay_exponent = 0.0;            // of |g - delta|
  bool cotton_checked = false;
  CottonAdmissibility cotton;
};

struct CompactifyOptions {
  bool check_cotton = false;
  double cotton_sigma = -4.5;
  double pinf_tolerance = 1e-6;
};

CompactificationResult compactify(const MetricField& g, const CompactifyOptions& opt = {});

// Angular averages over 4 shells of radius k t (k = 1..4) extrapolated to the centre, entrywise.
Mat3 extrapolate_to_center(const MetricField& g, const Vec3& center, double t, int order = 2);

// g_hat = psi^4 gamma_tilde with det(gamma_tilde) = 1, then (v / v(0))^4 gamma_tilde where
// -8 Delta v + R v = 0 for gamma_tilde on the box and v = 1 on its faces.
struct Regularization {
  MetricField metric;
  MetricField unimodular;
  LegendreFit v;
  double v0 = 1.0;
  double residual = 0.0;
  double fit_rms = 0.0;
  bool converged = false;
};

MetricField unimodular_part(const MetricField& g);
Regularization regularize(const MetricField& g_hat, const BoxGrid& grid, int fit_degree = 8, double tol = 1e-10);

// gamma = |ybar|^-4 g_hat pulled back through zbar = ybar / |ybar|^2.
struct Decompactification {
  MetricField gamma;
  DecayFit remainder;  // |gamma - delta| in zbar
};

Decompactification decompactify(const MetricField& g_hat_ybar, const std::vector<double>& radii = {},
                                const SphereRule& sphere = SphereRule(8));

struct ConformalExpansion {
  double C = 0.0;
  double alpha = 0.0;
  double remainder_exponent = 0.0;  // of |u - 1 - C/r|, before capping alpha
  double fit_residual = 0.0;
  double energy_cross = 0.0;        // E - 2C, when charges ran
  double traceless_defect = 0.0;
  std::vector<double> radii, u_minus_one;
};

// u = (tr(gamma^-1 g) / 3)^(1/4) averaged over shells, fitted as 1 + C/r + b r^(-1-beta).
ConformalExpansion fit_conformal_factor(const MetricField& g, const MetricField& gamma,
                                        const std::vector<double>& radii, const SphereRule& sphere = SphereRule(12));
ConformalExpansion fit_conformal_factor(const std::function<double(const Vec3&)>& u, const std::vector<double>& radii,
                                        const SphereRule& sphere = SphereRule(12));

ScalarField conformal_factor(const MetricField& g, const MetricField& gamma);

struct MassOptions {
  double inner_radius = 8.0;
  double truncation = 200.0;
  int sphere_n = 12;
  int radial_per_panel = 8;
};

struct MassResult {
  double C = 0.0;            // including the tail estimate
  double C_truncated = 0.0;
  double tail_estimate = 0.0;
  double volume_term = 0.0, inner_flux = 0.0;
  double integrand_exponent = 0.0;
  bool tail_convergent = false;
};

// (1 / 32 pi) [int over r_in < |z| < R of (R_g u^5 - R_gamma u) dV_gamma - 8 oint_{r_in} du/dnu_gamma].
// scalar_g overrides the scalar curvature of g (e.g. evaluated in another chart).
MassResult mass_constant(const MetricField& g, const MetricField& gamma, const ScalarField& u,
                         const MassOptions& opt = {}, const std::function<double(const Vec3&)>& scalar_g = {});

struct PipelineOptions {
  bool regularize = true;
  bool harmonic = true;
  bool normal = true;
  bool decompactify = true;
  bool fit = true;
  bool mass = true;
  bool charges = true;
  int grid_n = 33;
  int fit_degree = 8;
  double harmonic_tolerance = 1e-10;
  double regularize_tolerance = 1e-10;
  double normal_tolerance = 1e-6;
  double fit_inner = 8.0, fit_outer = 200.0;
  int fit_shells = 12;
  MassOptions mass_options;
  CompactifyOptions compactify_options;
  std::vector<double> charge_radii;  // default: dyadic from 4 inside the chart
};

struct StageRecord {
  std::string name, status, message;
};

struct MainExpansion {
  std::vector<StageRecord> stages;
  CompactificationResult compactification;
  Regularization regularization;
  double harmonic_residual = 0.0, harmonic_fit_rms = 0.0;
  Mat3 harmonic_jacobian = Mat3::Identity();
  double normal_metric_defect = 0.0, normal_dg = 0.0;
  CoordinateMap zbar_map;  // z -> zbar
  MetricField gamma, g_zbar;
  ConformalExpansion expansion;
  MassResult mass;
  AdmCharges charges;
  double trace_coefficient = 0.0;  // 4C from the trace of g in zbar
  DecayFit remainder;              // of g_zbar - (1 + 4C/|zbar|) delta
  MapClassification map_class;
  bool ok = false;
};

MainExpansion run_main_expansion(const MetricField& g, const PipelineOptions& opt = {});

std::vector<double> geometric_radii(double a, double b, int count);

}  // namespace aegeo
