#pragma once

#include "aegeo/fields.hpp"

#include <array>

namespace aegeo {

using Christoffel = std::array<Mat3, 3>;  // gamma[k](i, j) = Gamma^k_ij
using Rank3 = std::array<Mat3, 3>;         // t[i](j, k)
using Rank4 = std::array<std::array<Mat3, 3>, 3>;  // t[i][j](k, l)

struct PointCurvature {
  Mat3 g;
  Christoffel gamma;
  Rank4 riemann;  // riemann[i][j](k, l) = R^i_jkl
  Mat3 ricci;
  double scalar = 0.0;
  Vec3 dscalar = Vec3::Zero();
  Rank3 cotton;   // cotton[i](j, k) = C_ijk
  Rank3 dricci;   // dricci[k](i, j) = nabla_k Ric_ij
};

// Christoffel symbols at p from the metric jets (exact for analytic metrics).
Christoffel christoffel_at(const MetricField& g, const Vec3& p);
PointCurvature curvature_at(const MetricField& g, const Vec3& p);
double scalar_curvature_at(const MetricField& g, const Vec3& p);
// Jet of R_g at a jet point; exact to first order.
JetD scalar_curvature_jet(const MetricField& g, const Vec3J& x);
// Schur residual covector g^{ki} nabla_k (Ric - R g / 2)_ij at p.
Vec3 schur_covector_at(const MetricField& g, const Vec3& p);

struct CurvatureBundle {
  TensorField gamma, riemann, ricci, scalar, cotton;
  double stencil_spacing = 0.0;
  std::vector<Eigen::Index> flagged;  // nodes dropped for lack of stencil support
};

TensorField christoffel(const MetricField& g, const Points& nodes);
CurvatureBundle curvature_bundle(const MetricField& g, const Points& nodes);
TensorField cotton(const MetricField& g, const Points& nodes);
TensorField ricci(const MetricField& g, const Points& nodes);
TensorField scalar_curvature(const MetricField& g, const Points& nodes);

// R_{u^4 g} = u^-5 (-8 Delta_g u + R_g u); throws when u <= 0 at a node.
Eigen::VectorXd conformal_scalar(const MetricField& g, const ScalarField& u, const Points& nodes);

// Sup over nodes of |nabla^i (Ric_ij - R g_ij / 2)|. h = 0: analytic jets; h > 0:
// curvature from FD metric jets of spacing h, divergence by centred differences of the Einstein tensor.
double schur_residual(const MetricField& g, const Points& nodes, double h = 0.0);

}  // namespace aegeo
