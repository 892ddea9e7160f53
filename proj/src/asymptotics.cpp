#include "aegeo/asymptotics.hpp"

#include "aegeo/curvature.hpp"
#include "aegeo/parallel.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

namespace aegeo {

void WeightedNormSpec::validate() const {
  if (k < 0 || k > 2) throw std::invalid_argument("weighted norm: k must be 0, 1 or 2");
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("weighted norm: need 1 < p < inf");
}

namespace {

struct Panels {
  std::vector<double> breaks;
  RadialRule rule;
  Panels(const Chart& c)
      : breaks(dyadic_breaks(c.inner_radius() > 0 ? c.inner_radius() : c.outer_radius() * std::ldexp(1.0, -10),
                             c.outer_radius())),
        rule(breaks, c.resolution.radial_nodes) {}
};

double sigma_of(double r) { return std::sqrt(1.0 + r * r); }

// shell[a][panel] = integral of |sigma^(w_a) d^a f|^p over the panel; per-level integrand supplied by f.
WeightedNorm assemble(const Chart& chart, const WeightedNormSpec& spec, int levels,
                      const std::function<void(long, const Vec3&, double*)>& level_norms, bool allow_l1 = false) {
  if (!(allow_l1 && spec.p == 1.0 && spec.k == 0)) spec.validate();
  if (std::holds_alternative<Torus>(chart.domain)) throw std::invalid_argument("weighted norm needs an annulus or ball");
  Panels pn(chart);
  SphereRule s = chart.sphere();
  const Eigen::Index ns = s.size();
  const size_t nr = pn.rule.r.size();
  const size_t npanel = pn.breaks.size() - 1;
  std::vector<std::vector<double>> acc(levels, std::vector<double>(npanel, 0.0));
  std::vector<double> buf(nr * ns * levels);
  parallel_for(static_cast<long>(nr * ns), [&](long n) {
    size_t i = n / ns;
    Eigen::Index j = n % ns;
    level_norms(n, pn.rule.r[i] * s.dirs.col(j), &buf[n * levels]);
  });
  for (size_t i = 0; i < nr; ++i) {
    double r = pn.rule.r[i];
    for (Eigen::Index j = 0; j < ns; ++j)
      for (int a = 0; a < levels; ++a) {
        double w = std::pow(sigma_of(r), -spec.delta - 3.0 / spec.p + a);
        acc[a][pn.rule.panel[i]] += pn.rule.w[i] * r * r * s.weights[j] * std::pow(w * buf[(i * ns + j) * levels + a], spec.p);
      }
  }
  WeightedNorm out;
  out.exceptional_weight = std::floor(spec.delta) == spec.delta;
  out.shell_contributions.assign(npanel, 0.0);
  for (size_t q = 0; q < npanel; ++q) {
    out.shell_radii.push_back(pn.breaks[q]);
    for (int a = 0; a < levels; ++a) out.shell_contributions[q] += acc[a][q];
  }
  double value = 0.0;
  for (int a = 0; a < levels; ++a) {
    double tot = 0.0;
    for (double c : acc[a]) tot += c;
    value += std::pow(tot, 1.0 / spec.p);
  }
  out.value = value;
  // Full dyadic panels only for the ratio test.
  std::vector<double> full;
  for (size_t q = 0; q < npanel; ++q)
    if (std::abs(pn.breaks[q + 1] - 2.0 * pn.breaks[q]) <= 1e-12 * pn.breaks[q + 1])
      full.push_back(out.shell_contributions[q]);
  double total = 0.0;
  for (double c : out.shell_contributions) total += c;
  if (full.size() >= 2 && total > 0.0) {
    size_t first = full.size() >= 4 ? full.size() - 4 : 0;
    double worst = 0.0, last_ratio = 0.0;
    for (size_t q = first; q + 1 < full.size(); ++q) {
      double ratio = full[q] > 0.0 ? full[q + 1] / full[q] : (full[q + 1] > 0.0 ? INFINITY : 0.0);
      worst = std::max(worst, ratio);
      last_ratio = ratio;
    }
    out.divergence_flag = worst >= 1.0 - 1e-3;
    if (out.divergence_flag) {
      out.tail_estimate = std::numeric_limits<double>::infinity();
    } else {
      double tail = full.back() * last_ratio / (1.0 - last_ratio);
      out.tail_estimate = std::pow(total + tail, 1.0 / spec.p) - std::pow(total, 1.0 / spec.p);
    }
  }
  return out;
}

}  // namespace

WeightedNorm weighted_norm(const Chart& chart, const std::function<double(const Vec3&)>& f,
                           const WeightedNormSpec& spec) {
  if (spec.k != 0) throw std::invalid_argument("weighted norm: k exceeds available derivative data");
  return assemble(chart, spec, 1, [&](long, const Vec3& p, double* out) { out[0] = f(p); });
}

WeightedNorm weighted_l1_norm(const Chart& chart, const std::function<double(const Vec3&)>& f, double delta) {
  return assemble(
      chart, WeightedNormSpec{0, 1.0, delta}, 1, [&](long, const Vec3& p, double* out) { out[0] = f(p); }, true);
}

WeightedNorm weighted_norm(const TensorField& f, const WeightedNormSpec& spec) {
  if (spec.k != 0) throw std::invalid_argument("weighted norm: k exceeds available derivative data");
  f.validate();
  Points expected = f.chart.nodes();
  if (expected.cols() != f.nodes.cols() || (expected - f.nodes).cwiseAbs().maxCoeff() > 1e-12 * f.chart.outer_radius())
    throw std::invalid_argument("weighted norm: tensor field must be sampled on its chart's quadrature nodes");
  // Chart::nodes uses the same radial-major order as the quadrature loop.
  Eigen::VectorXd norms = f.components.colwise().norm();
  return assemble(f.chart, spec, 1, [&](long n, const Vec3&, double* out) { out[0] = norms[n]; });
}

WeightedNorm weighted_norm(const Chart& chart, const JetComponents& f, const WeightedNormSpec& spec) {
  spec.validate();
  const int levels = spec.k + 1;
  return assemble(chart, spec, levels, [&](long, const Vec3& p, double* out) {
    std::vector<JetD> c = f(seed(p));
    for (int a = 0; a < levels; ++a) out[a] = 0.0;
    // Derivatives of one order are combined in a single Frobenius norm.
    for (const JetD& v : c) {
      out[0] += v.value() * v.value();
      if (levels > 1)
        for (int i = 0; i < 3; ++i) out[1] += v.d(i) * v.d(i);
      if (levels > 2)
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) out[2] += v.d(i, j) * v.d(i, j);
    }
    for (int a = 0; a < levels; ++a) out[a] = std::sqrt(out[a]);
  });
}

DecayFit decay_fit(const std::vector<double>& radii, const std::vector<double>& sup, double floor) {
  if (radii.size() < 2 || radii.size() != sup.size()) throw std::invalid_argument("decay fit needs >= 2 shells");
  for (size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw std::invalid_argument("decay fit radii must be strictly increasing");
  DecayFit f;
  f.radii = radii;
  for (size_t i = 0; i < sup.size(); ++i) {
    if (!(sup[i] > floor)) {
      f.vanishing = true;
      f.exponent = std::numeric_limits<double>::infinity();
      f.amplitude = 0.0;
      f.residual = 0.0;
      f.log_sup.clear();
      for (double s : sup) f.log_sup.push_back(s > 0 ? std::log(s) : -INFINITY);
      return f;
    }
    f.log_sup.push_back(std::log(sup[i]));
  }
  const double n = static_cast<double>(radii.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < radii.size(); ++i) {
    double x = std::log(radii[i]), y = f.log_sup[i];
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double icpt = (sy - slope * sx) / n;
  double rss = 0.0;
  for (size_t i = 0; i < radii.size(); ++i) {
    double e = f.log_sup[i] - (icpt + slope * std::log(radii[i]));
    rss += e * e;
  }
  f.exponent = -slope;
  f.amplitude = std::exp(icpt);
  f.residual = std::sqrt(rss / n);
  return f;
}

Points shell_nodes(const std::vector<double>& radii, const SphereRule& s) {
  Points p(3, static_cast<Eigen::Index>(radii.size()) * s.size());
  Eigen::Index k = 0;
  for (double r : radii)
    for (Eigen::Index j = 0; j < s.size(); ++j) p.col(k++) = r * s.dirs.col(j);
  return p;
}

DecayFit decay_fit(const std::function<double(const Vec3&)>& f, const std::vector<double>& radii,
                   const SphereRule& s, double floor) {
  std::vector<double> vals(radii.size() * s.size());
  parallel_for(static_cast<long>(vals.size()), [&](long n) {
    vals[n] = f(radii[n / s.size()] * s.dirs.col(n % s.size()));
  });
  std::vector<double> sup(radii.size(), 0.0);
  for (size_t i = 0; i < vals.size(); ++i) sup[i / s.size()] = std::max(sup[i / s.size()], vals[i]);
  return decay_fit(radii, sup, floor);
}

DecayFit decay_fit(const TensorField& f, const std::vector<double>& radii) {
  if (radii.size() < 4) throw std::invalid_argument("decay fit needs >= 4 radii");
  f.validate();
  std::vector<double> sup(radii.size(), -1.0);
  for (Eigen::Index q = 0; q < f.nodes.cols(); ++q) {
    double r = f.nodes.col(q).norm();
    for (size_t i = 0; i < radii.size(); ++i)
      if (std::abs(r - radii[i]) <= 1e-9 * radii[i]) sup[i] = std::max(sup[i], f.components.col(q).norm());
  }
  for (double s : sup)
    if (s < 0) throw std::invalid_argument("decay fit: a radius has no nodes in the tensor field");
  return decay_fit(radii, sup);
}

CottonAdmissibility cotton_admissible(const MetricField& g, double sw, const Chart& chart) {
  if (!(sw > -6.0 && sw < -4.0)) throw std::invalid_argument("cotton admissibility needs -6 < sigma < -4");
  CottonAdmissibility a;
  a.p1 = 3.0 / (6.0 + sw);
  WeightedNormSpec spec{0, a.p1, sw};
  a.detail = weighted_norm(
      chart,
      [&g](const Vec3& p) {
        PointCurvature c = curvature_at(g, p);
        double s = 0.0, d = 0.0;
        for (int i = 0; i < 3; ++i) {
          s += c.cotton[i].squaredNorm();
          d += c.dricci[i].squaredNorm();
        }
        // Cancellation noise of a vanishing Cotton tensor.
        return s <= 1e-22 * d ? 0.0 : std::sqrt(s);
      },
      spec);
  a.norm = a.detail.value;
  a.admissible = !a.detail.divergence_flag;
  return a;
}

CottonAdmissibility cotton_admissible(const MetricField& g, double sw) {
  Chart c = g.chart;
  if (!std::holds_alternative<Annulus>(c.domain)) c = Chart::annulus("z", ChartKind::asymptotic_z, 1.0, 128.0);
  return cotton_admissible(g, sw, c);
}

CoordinateMap kelvin_map(const Chart& source, const Chart& target) {
  auto pairs = [](const Chart& a, const Chart& b) {
    auto an = std::get_if<Annulus>(&a.domain);
    auto pb = std::get_if<PuncturedBall>(&b.domain);
    if (!an || !pb) return false;
    auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(std::abs(x), std::abs(y)); };
    return close(pb->radius, 1.0 / an->r_in) && close(pb->puncture_radius, 1.0 / an->r_out);
  };
  if (!pairs(source, target) && !pairs(target, source))
    throw std::invalid_argument("kelvin map: annulus [a, b] must pair with punctured ball [1/b, 1/a]");
  auto m = make_map(
      source, target, [](const auto& p) { return kelvin(p); }, [](const auto& p) { return kelvin_jacobian(p); },
      "kelvin");
  m.backward_fn = [](const Vec3& q) { return kelvin(q); };
  m.classification = CoordinateMap::Classification{"inversion", 0.0};
  return m;
}

MapClassification classify_map(const CoordinateMap& map, const std::vector<double>& radii, const SphereRule& s) {
  if (radii.size() < 4) throw std::invalid_argument("classify_map needs >= 4 shells");
  MapClassification c;
  std::vector<double> dsup(radii.size(), 0.0), jsup(radii.size(), 0.0);
  const Eigen::Index ns = s.size();
  std::vector<double> dv(radii.size() * ns), jv(radii.size() * ns);
  parallel_for(static_cast<long>(dv.size()), [&](long n) {
    Vec3 z = radii[n / ns] * s.dirs.col(n % ns);
    dv[n] = (map(z) - z).norm();
    jv[n] = (map.jacobian(z) - Mat3::Identity()).norm();
  });
  for (size_t i = 0; i < dv.size(); ++i) {
    dsup[i / ns] = std::max(dsup[i / ns], dv[i]);
    jsup[i / ns] = std::max(jsup[i / ns], jv[i]);
  }
  // Roundoff floor relative to the coordinate scale.
  for (size_t i = 0; i < radii.size(); ++i) {
    if (dsup[i] <= 1e-10 * radii[i]) dsup[i] = 0.0;
    if (jsup[i] <= 1e-10) jsup[i] = 0.0;
  }
  c.displacement = decay_fit(radii, dsup);
  c.jacobian = decay_fit(radii, jsup);
  c.amplitude = c.displacement.amplitude;
  double a1 = c.displacement.vanishing ? INFINITY : 1.0 + c.displacement.exponent;
  double a2 = c.jacobian.vanishing ? INFINITY : c.jacobian.exponent;
  c.alpha = std::min(a1, a2);
  c.residual = std::max(c.displacement.residual, c.jacobian.residual);
  c.leading = jsup.back() < 0.5 ? "identity" : "other";
  c.compatible = c.leading == "identity" && c.alpha > 0.05;
  return c;
}

MonopoleFit fit_monopole(const std::vector<double>& r, const std::vector<double>& y, double beta_max) {
  const Eigen::Index n = static_cast<Eigen::Index>(r.size());
  if (n < 3) throw std::invalid_argument("monopole fit needs >= 3 radii");
  auto solve = [&](double beta, MonopoleFit& out) {
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n), wt(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      // Relative weighting by r keeps far shells from being drowned out.
      wt[i] = r[i];
      a(i, 0) = wt[i] / r[i];
      a(i, 1) = wt[i] * std::pow(r[i], -1.0 - beta);
      b[i] = wt[i] * y[i];
    }
    Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
    out.a = x[0];
    out.b = x[1];
    out.beta = beta;
    out.rms = std::sqrt((a * x - b).squaredNorm() / n);
    return out.rms;
  };
  MonopoleFit best;
  double best_rms = INFINITY;
  const int grid = 300;
  double best_beta = beta_max;
  for (int i = 1; i <= grid; ++i) {
    MonopoleFit f;
    double beta = beta_max * i / grid;
    if (solve(beta, f) < best_rms) { best_rms = f.rms; best_beta = beta; }
  }
  double lo = std::max(1e-6, best_beta - beta_max / grid), hi = std::min(beta_max, best_beta + beta_max / grid);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  MonopoleFit f1, f2;
  double e1 = solve(x1, f1), e2 = solve(x2, f2);
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    if (e1 < e2) { hi = x2; x2 = x1; e2 = e1; x1 = hi - gr * (hi - lo); e1 = solve(x1, f1); }
    else { lo = x1; x1 = x2; e1 = e2; x2 = lo + gr * (hi - lo); e2 = solve(x2, f2); }
  }
  solve(0.5 * (lo + hi), best);
  if (best.rms > best_rms) solve(best_beta, best);
  return best;
}

double extrapolate_to_zero(const std::vector<double>& t, const std::vector<double>& y, int order) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd a(n, order + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k <= order; ++k) a(i, k) = std::pow(t[i], k);
    b[i] = y[i];
  }
  return a.colPivHouseholderQr().solve(b)[0];
}

}  // namespace aegeo
