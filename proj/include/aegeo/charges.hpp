#pragma once

#include "aegeo/asymptotics.hpp"
#include "aegeo/fields.hpp"

#include <vector>

namespace aegeo {

struct ChargeOptions {
  int sphere_n = 16;
  double tolerance = 5e-2;  // Cauchy gap threshold, relative to max(1, |limit|)
};

// Limit of a sequence of partials in r: a + b r^-beta, beta from the gap decay.
struct Extrapolation {
  double value = 0.0;
  double beta = 0.0;
  double gap_bound = 0.0;
  bool fitted = false;
};

Extrapolation extrapolate_partials(const std::vector<double>& radii, const std::vector<double>& partials);

struct AdmCharges {
  std::vector<double> radii;
  std::vector<double> energy_partials, energy_gaps;
  double energy = 0.0;
  double energy_beta = 0.0;
  bool energy_converged = false;

  std::vector<Vec3> com_numerators;  // unnormalized surface integrals
  std::vector<Vec3> com_partials;    // normalized by 16 pi E_r when |E_r| > 1e-8
  std::vector<double> com_gaps;
  Vec3 com_numerator = Vec3::Zero();
  Vec3 com = Vec3::Zero();
  bool com_normalized = false;
  bool com_converged = false;
};

// Flux integrands (Euclidean normal and measure) on one sphere.
double energy_flux(const MetricField& g, double r, const SphereRule& s);
Vec3 com_flux(const MetricField& g, double r, const SphereRule& s);

AdmCharges adm_energy(const MetricField& g, const std::vector<double>& radii, const ChargeOptions& opt = {});
// Energy and centre of mass.
AdmCharges adm_com(const MetricField& g, const std::vector<double>& radii, const ChargeOptions& opt = {});

struct ComDiagnostic {
  std::vector<double> annulus_inner, annulus_outer;
  std::vector<Vec3> moments;          // int over A_k of x^a R_g dx
  std::vector<double> gap_residuals;  // |N_{k+1} - N_k - moment_k|
  DecayFit residual_fit;
  double alpha = 0.0;
  WeightedNorm scalar_norm;           // ||R_g|| in L^1_{-4}, truncated
  bool moment_integrable = false;     // x R_g in L^1
  bool gaps_bounded = false;
};

ComDiagnostic com_convergence_diag(const MetricField& g, const std::vector<double>& radii,
                                   const ChargeOptions& opt = {});

}  // namespace aegeo
