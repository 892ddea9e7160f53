#include "aegeo/charges.hpp"

#include "aegeo/curvature.hpp"
#include "aegeo/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace aegeo {

namespace {

struct SurfaceTerms {
  double energy;
  Vec3 com;
};

SurfaceTerms surface_terms(const MetricField& g, double r, const SphereRule& s, bool want_com) {
  const Eigen::Index n = s.size();
  std::vector<double> e(n);
  std::vector<Vec3> c(n, Vec3::Zero());
  parallel_for(n, [&](long q) {
    Vec3 nu = s.dirs.col(q);
    Vec3 x = r * nu;
    Mat3J gj = g.jet(x);
    double flux = 0.0;
    for (int j = 0; j < 3; ++j) {
      double v = 0.0;
      for (int i = 0; i < 3; ++i) v += gj(i, j).d(i) - gj(i, i).d(j);
      flux += v * nu[j];
    }
    e[q] = s.weights[q] * r * r * flux;
    if (want_com) {
      Mat3 gv = values(gj);
      double tr = gv.trace();
      Vec3 term = gv * nu - tr * nu;
      c[q] = s.weights[q] * r * r * (x * flux - term);
    }
  });
  SurfaceTerms out{0.0, Vec3::Zero()};
  for (Eigen::Index q = 0; q < n; ++q) {
    out.energy += e[q];
    out.com += c[q];
  }
  return out;
}

void check_radii(const MetricField& g, const std::vector<double>& radii) {
  if (radii.size() < 2) throw std::invalid_argument("charges need >= 2 radii");
  for (size_t i = 0; i < radii.size(); ++i) {
    if (!g.chart.contains_radius(radii[i]))
      throw std::invalid_argument("radius " + std::to_string(radii[i]) + " lies outside the chart");
    if (i && !(radii[i] > radii[i - 1])) throw std::invalid_argument("radii must be increasing");
  }
}

bool cauchy_converged(const std::vector<double>& gaps, double tol) {
  if (gaps.size() < 3) return false;
  size_t n = gaps.size();
  bool decreasing = gaps[n - 1] < gaps[n - 2] && gaps[n - 2] < gaps[n - 3];
  bool tiny = gaps[n - 1] <= 1e-12;
  return (decreasing || tiny) && gaps[n - 1] <= tol;
}

}  // namespace

double energy_flux(const MetricField& g, double r, const SphereRule& s) {
  return surface_terms(g, r, s, false).energy;
}

Vec3 com_flux(const MetricField& g, double r, const SphereRule& s) { return surface_terms(g, r, s, true).com; }

Extrapolation extrapolate_partials(const std::vector<double>& radii, const std::vector<double>& p) {
  Extrapolation e;
  const size_t n = p.size();
  e.value = p.back();
  if (n < 3) return e;
  std::vector<double> gaps;
  double scale = 0.0;
  for (double v : p) scale = std::max(scale, std::abs(v));
  for (size_t i = 1; i < n; ++i) gaps.push_back(std::abs(p[i] - p[i - 1]));
  e.gap_bound = gaps.back();
  const double floor = 1e-13 * std::max(1.0, scale);
  if (gaps[n - 2] <= floor || gaps[n - 3] <= floor) return e;
  // Local exponent from the last two gaps.
  double beta = std::log(gaps[n - 3] / gaps[n - 2]) / std::log(radii[n - 1] / radii[n - 2]);
  if (!(beta > 0.05)) return e;
  int terms = 1;
  size_t m = 3;
  if (std::abs(beta - std::round(beta)) < 0.1 && n >= 4) {
    beta = std::round(beta);
    terms = std::min<int>(4, static_cast<int>(n) - 1);
    m = static_cast<size_t>(terms) + 1;
  }
  e.beta = beta;
  Eigen::MatrixXd a(m, terms + 1);
  Eigen::VectorXd b(m);
  for (size_t i = 0; i < m; ++i) {
    size_t k = n - m + i;
    for (int t = 0; t <= terms; ++t) a(i, t) = std::pow(radii[k], -t * beta);
    b[i] = p[k];
  }
  Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
  if (!std::isfinite(x[0]) || std::abs(x[0] - p.back()) > 4.0 * gaps.back()) return e;
  e.value = x[0];
  e.fitted = true;
  return e;
}

AdmCharges adm_energy(const MetricField& g, const std::vector<double>& radii, const ChargeOptions& opt) {
  check_radii(g, radii);
  SphereRule s(opt.sphere_n);
  AdmCharges c;
  c.radii = radii;
  for (double r : radii) c.energy_partials.push_back(surface_terms(g, r, s, false).energy / (16.0 * M_PI));
  for (size_t i = 1; i < radii.size(); ++i)
    c.energy_gaps.push_back(std::abs(c.energy_partials[i] - c.energy_partials[i - 1]));
  Extrapolation e = extrapolate_partials(radii, c.energy_partials);
  c.energy = e.value;
  c.energy_beta = e.beta;
  c.energy_converged = cauchy_converged(c.energy_gaps, opt.tolerance * std::max(1.0, std::abs(c.energy)));
  return c;
}

AdmCharges adm_com(const MetricField& g, const std::vector<double>& radii, const ChargeOptions& opt) {
  check_radii(g, radii);
  SphereRule s(opt.sphere_n);
  AdmCharges c;
  c.radii = radii;
  for (double r : radii) {
    SurfaceTerms t = surface_terms(g, r, s, true);
    c.energy_partials.push_back(t.energy / (16.0 * M_PI));
    c.com_numerators.push_back(t.com);
  }
  const size_t n = radii.size();
  for (size_t i = 1; i < n; ++i) c.energy_gaps.push_back(std::abs(c.energy_partials[i] - c.energy_partials[i - 1]));
  Extrapolation e = extrapolate_partials(radii, c.energy_partials);
  c.energy = e.value;
  c.energy_beta = e.beta;
  c.energy_converged = cauchy_converged(c.energy_gaps, opt.tolerance * std::max(1.0, std::abs(c.energy)));

  c.com_normalized = std::abs(c.energy) > 1e-8;
  for (size_t i = 0; i < n; ++i) {
    double er = c.energy_partials[i];
    c.com_partials.push_back(std::abs(er) > 1e-8 ? Vec3(c.com_numerators[i] / (16.0 * M_PI * er))
                                                  : c.com_numerators[i]);
  }
  for (size_t i = 1; i < n; ++i) c.com_gaps.push_back((c.com_partials[i] - c.com_partials[i - 1]).norm());
  for (int k = 0; k < 3; ++k) {
    std::vector<double> comp;
    for (const Vec3& v : c.com_numerators) comp.push_back(v[k]);
    c.com_numerator[k] = extrapolate_partials(radii, comp).value;
  }
  c.com = c.com_normalized ? Vec3(c.com_numerator / (16.0 * M_PI * c.energy)) : c.com_numerator;
  c.com_converged = cauchy_converged(c.com_gaps, opt.tolerance * std::max(1.0, c.com.norm()));
  return c;
}

namespace {

// R_g with cancellation noise of a scalar-flat metric set to zero.
double resolved_scalar(const MetricField& g, const Vec3& p) {
  PointCurvature c = curvature_at(g, p);
  return std::abs(c.scalar) <= 1e-12 * c.ricci.norm() ? 0.0 : c.scalar;
}

}  // namespace

ComDiagnostic com_convergence_diag(const MetricField& g, const std::vector<double>& radii, const ChargeOptions& opt) {
  check_radii(g, radii);
  ComDiagnostic d;
  SphereRule s(opt.sphere_n);
  const int per_panel = 8;
  std::vector<double> x, w;
  gauss_legendre(per_panel, x, w);
  AdmCharges c = adm_com(g, radii, opt);
  for (size_t k = 0; k + 1 < radii.size(); ++k) {
    double a = radii[k], b = radii[k + 1];
    const long n = per_panel * s.size();
    std::vector<Vec3> contrib(n);
    parallel_for(n, [&](long q) {
      int i = static_cast<int>(q / s.size());
      Eigen::Index j = q % s.size();
      double r = 0.5 * (a + b) + 0.5 * (b - a) * x[i];
      Vec3 p = r * s.dirs.col(j);
      contrib[q] = 0.5 * (b - a) * w[i] * s.weights[j] * r * r * resolved_scalar(g, p) * p;
    });
    Vec3 m = Vec3::Zero();
    for (const Vec3& v : contrib) m += v;
    d.annulus_inner.push_back(a);
    d.annulus_outer.push_back(b);
    d.moments.push_back(m);
    d.gap_residuals.push_back((c.com_numerators[k + 1] - c.com_numerators[k] - m).norm());
  }
  double scale = 0.0;
  for (const Vec3& v : c.com_numerators) scale = std::max(scale, v.norm());
  if (d.gap_residuals.size() >= 2) {
    d.residual_fit = decay_fit(d.annulus_outer, d.gap_residuals, 1e-10 * std::max(1.0, scale));
    d.alpha = d.residual_fit.vanishing ? INFINITY : d.residual_fit.exponent;
  }
  d.gaps_bounded = d.gap_residuals.size() < 2 || d.residual_fit.vanishing || d.alpha > 0.0;
  Chart ch = Chart::annulus("z", ChartKind::asymptotic_z, radii.front(), radii.back(), g.chart.resolution);
  d.scalar_norm = weighted_l1_norm(ch, [&g](const Vec3& p) { return std::abs(resolved_scalar(g, p)); }, -4.0);
  d.moment_integrable = !d.scalar_norm.divergence_flag;
  return d;
}

}  // namespace aegeo
