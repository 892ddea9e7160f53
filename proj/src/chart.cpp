#include "aegeo/chart.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace aegeo {

const char* to_string(ChartKind k) {
  switch (k) {
    case ChartKind::asymptotic_z: return "asymptotic_z";
    case ChartKind::inverted_x: return "inverted_x";
    case ChartKind::harmonic_y: return "harmonic_y";
    case ChartKind::normal_ybar: return "normal_ybar";
    case ChartKind::decompactified_zbar: return "decompactified_zbar";
    case ChartKind::torus: return "torus";
  }
  return "?";
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

SphereRule::SphereRule(int n_theta, int n_phi) : nt_(n_theta), np_(n_phi > 0 ? n_phi : 2 * n_theta) {
  if (nt_ < 2 || np_ < 4 || np_ % 2) throw std::invalid_argument("sphere rule needs n_theta >= 2 and even n_phi >= 4");
  std::vector<double> ct, wt;
  gauss_legendre(nt_, ct, wt);
  dirs.resize(3, nt_ * np_);
  weights.resize(nt_ * np_);
  const double dphi = 2.0 * std::numbers::pi / np_;
  for (int i = 0; i < nt_; ++i) {
    double st = std::sqrt(std::max(0.0, 1.0 - ct[i] * ct[i]));
    for (int j = 0; j < np_; ++j) {
      double ph = j * dphi;
      Eigen::Index k = i * np_ + j;
      dirs.col(k) << st * std::cos(ph), st * std::sin(ph), ct[i];
      weights[k] = wt[i] * dphi;
    }
  }
}

Eigen::Index SphereRule::antipode(Eigen::Index k) const {
  Eigen::Index i = k / np_, j = k % np_;
  return (nt_ - 1 - i) * np_ + (j + np_ / 2) % np_;
}

RadialRule::RadialRule(std::vector<double> b, int per_panel) : breaks(std::move(b)) {
  std::vector<double> x, w0;
  gauss_legendre(per_panel, x, w0);
  for (size_t p = 0; p + 1 < breaks.size(); ++p) {
    double a = breaks[p], c = breaks[p + 1];
    for (int i = 0; i < per_panel; ++i) {
      r.push_back(0.5 * (a + c) + 0.5 * (c - a) * x[i]);
      w.push_back(0.5 * (c - a) * w0[i]);
      panel.push_back(static_cast<int>(p));
    }
  }
}

std::vector<double> dyadic_radii(double r0, int count) {
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i) r[i] = std::ldexp(r0, i);
  return r;
}

std::vector<double> dyadic_breaks(double r_in, double r_out) {
  std::vector<double> b{r_in};
  while (b.back() * 2.0 < r_out * (1.0 - 1e-12)) b.push_back(b.back() * 2.0);
  if (b.back() < r_out) b.push_back(r_out);
  return b;
}

Chart Chart::annulus(std::string name, ChartKind kind, double r_in, double r_out, Resolution res) {
  Chart c{std::move(name), kind, Annulus{r_in, r_out}, res};
  c.validate();
  return c;
}

Chart Chart::punctured_ball(std::string name, ChartKind kind, double radius, double puncture, Resolution res) {
  Chart c{std::move(name), kind, PuncturedBall{radius, puncture}, res};
  c.validate();
  return c;
}

Chart Chart::torus(std::string name, double period, int n) {
  Chart c{std::move(name), ChartKind::torus, Torus{period}, Resolution{n, n}};
  c.validate();
  return c;
}

void Chart::validate() const {
  if (resolution.radial_nodes < 4 || resolution.angular_nodes < 4)
    throw std::invalid_argument("chart " + name + ": node counts must be >= 4");
  if (auto a = std::get_if<Annulus>(&domain)) {
    if (!(a->r_in > 0 && a->r_in < a->r_out)) throw std::invalid_argument("chart " + name + ": need 0 < r_in < r_out");
  } else if (auto b = std::get_if<PuncturedBall>(&domain)) {
    if (!(b->puncture_radius >= 0 && b->puncture_radius < b->radius))
      throw std::invalid_argument("chart " + name + ": need 0 <= puncture < radius");
  } else if (std::get<Torus>(domain).period <= 0) {
    throw std::invalid_argument("chart " + name + ": period must be positive");
  }
}

double Chart::inner_radius() const {
  if (auto a = std::get_if<Annulus>(&domain)) return a->r_in;
  if (auto b = std::get_if<PuncturedBall>(&domain)) return b->puncture_radius;
  return 0.0;
}

double Chart::outer_radius() const {
  if (auto a = std::get_if<Annulus>(&domain)) return a->r_out;
  if (auto b = std::get_if<PuncturedBall>(&domain)) return b->radius;
  return std::numeric_limits<double>::infinity();
}

bool Chart::contains_radius(double r) const {
  const double s = 1e-12 * std::max(1.0, outer_radius());
  if (std::holds_alternative<Torus>(domain)) return true;
  if (std::holds_alternative<Annulus>(domain)) return r >= inner_radius() - s && r <= outer_radius() + s;
  return r > inner_radius() - s && r <= outer_radius() + s;
}

bool Chart::contains(const Vec3& p, double) const { return contains_radius(p.norm()); }

Points Chart::nodes() const {
  if (auto t = std::get_if<Torus>(&domain)) {
    const int n = resolution.radial_nodes;
    const double h = t->period / n;
    Points p(3, n * n * n);
    Eigen::Index k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) p.col(k++) << i * h, j * h, l * h;
    return p;
  }
  double a = inner_radius(), b = outer_radius();
  if (a <= 0) a = std::ldexp(b, -10);
  RadialRule rr(dyadic_breaks(a, b), resolution.radial_nodes);
  SphereRule s = sphere();
  Points p(3, static_cast<Eigen::Index>(rr.r.size()) * s.size());
  Eigen::Index k = 0;
  for (double r : rr.r)
    for (Eigen::Index j = 0; j < s.size(); ++j) p.col(k++) = r * s.dirs.col(j);
  return p;
}

bool same_domain(const Chart& a, const Chart& b) {
  return a.kind == b.kind && a.domain.index() == b.domain.index() && a.inner_radius() == b.inner_radius() &&
         a.outer_radius() == b.outer_radius();
}

}  // namespace aegeo
