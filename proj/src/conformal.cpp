#include "aegeo/conformal.hpp"

#include "aegeo/curvature.hpp"
#include "aegeo/parallel.hpp"

#include <cmath>
#include <memory>

namespace aegeo {

std::vector<double> geometric_radii(double a, double b, int count) {
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i) r[i] = a * std::pow(b / a, double(i) / (count - 1));
  return r;
}

Mat3 extrapolate_to_center(const MetricField& g, const Vec3& center, double t, int order) {
  SphereRule s(6);
  std::vector<double> ts;
  std::vector<Mat3> avg;
  for (int k = 1; k <= 4; ++k) {
    Mat3 a = Mat3::Zero();
    for (Eigen::Index j = 0; j < s.size(); ++j) a += s.weights[j] / (4.0 * M_PI) * g(Vec3(center + k * t * s.dirs.col(j)));
    ts.push_back(k * t);
    avg.push_back(a);
  }
  Mat3 out;
  std::vector<double> y(4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 4; ++k) y[k] = avg[k](i, j);
      out(i, j) = extrapolate_to_zero(ts, y, order);
    }
  return out;
}

namespace {

double max_abs_offset(const Mat3& m) { return (m - Mat3::Identity()).cwiseAbs().maxCoeff(); }

CoordinateMap inversion(const Chart& source, const Chart& target) {
  auto m = make_map(
      source, target, [](const auto& p) { return kelvin(p); }, [](const auto& p) { return kelvin_jacobian(p); },
      "kelvin");
  m.backward_fn = [](const Vec3& q) { return kelvin(q); };
  return m;
}

}  // namespace

CompactificationResult compactify(const MetricField& g, const CompactifyOptions& opt) {
  const auto* an = std::get_if<Annulus>(&g.chart.domain);
  if (!an) throw StageError("compactify", "asymptotic chart", "metric must live on an annulus chart");
  CompactificationResult c;
  c.R0 = 2.0 * an->r_in;
  c.R1 = 4.0 * an->r_in;
  if (c.R1 >= an->r_out) throw StageError("compactify", "asymptotic chart", "chart too thin for the interior blend");

  std::vector<double> radii = geometric_radii(c.R1, an->r_out, 8);
  DecayFit d = decay_fit([&g](const Vec3& p) { return max_abs_offset(g(p)); }, radii, SphereRule(8), 1e-14);
  c.decay_exponent = d.vanishing ? INFINITY : d.exponent;
  if (!(c.decay_exponent > 0.5))
    throw StageError("compactify", "g - delta = O(|z|^-tau) with tau > 1/2",
                     "metric decay exponent " + std::to_string(c.decay_exponent) + " <= 0.5");

  const double R0 = c.R0, R1 = c.R1;
  c.phi = make_scalar(
      g.chart, [R0, R1](const auto& z) { return compactifying_factor(norm3(z), R0, R1); }, "phi");
  Chart xchart = Chart::punctured_ball("x", ChartKind::inverted_x, 1.0 / an->r_in, 1.0 / an->r_out, g.chart.resolution);
  CoordinateMap k = kelvin_map(xchart, g.chart);
  c.g_hat = pullback(conformal(g, c.phi), k);
  c.g_hat.chart = xchart;
  c.g_hat.label = "compactified(" + g.label + ")";

  c.g_hat_at_pinf = extrapolate_to_center(c.g_hat, Vec3::Zero(), 1e-3);
  c.pinf_defect = max_abs_offset(c.g_hat_at_pinf);
  std::vector<double> t, y;
  for (int i = 1; i <= 4; ++i) {
    Vec3 z = kelvin(Vec3(i * 1e-3, 0.0, 0.0));
    t.push_back(i * 1e-3);
    y.push_back(c.phi(z) * z.norm());
  }
  c.phi_tilde_at_pinf = extrapolate_to_zero(t, y, 2);
  if (c.pinf_defect > opt.pinf_tolerance)
    throw StageError("compactify", "g_hat(p_inf) = delta",
                     "extrapolated g_hat(p_inf) differs from delta by " + std::to_string(c.pinf_defect));
  if (opt.check_cotton) {
    c.cotton = cotton_admissible(g, opt.cotton_sigma);
    c.cotton_checked = true;
  }
  return c;
}

MetricField unimodular_part(const MetricField& g) {
  MetricField r = g;
  r.value_fn = [g](const Vec3& p) {
    Mat3 m = g.value_fn(p);
    return Mat3(m / std::cbrt(m.determinant()));
  };
  r.jet_fn = [g](const Vec3J& p) {
    Mat3J m = g.jet_fn(p);
    JetD s = pow(det3<JetD>(m), -1.0 / 3.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = m(i, j) * s;
    return m;
  };
  r.label = "unimodular(" + g.label + ")";
  return r;
}

Regularization regularize(const MetricField& g_hat, const BoxGrid& grid, int fit_degree, double tol) {
  Regularization reg;
  reg.unimodular = unimodular_part(g_hat);
  const MetricField& gt = reg.unimodular;
  EllipticProblem pb;
  pb.metric = gt;
  pb.grid = grid;
  pb.boundary = [](const Vec3&) { return 1.0; };
  pb.potential = [&gt](const Vec3& p) { return scalar_curvature_at(gt, p) / 8.0; };
  pb.tolerance = tol;
  pb.max_iterations = 20000;
  DirichletResult res = dirichlet_solve(pb);
  reg.residual = res.residual;
  reg.converged = res.converged;
  Eigen::MatrixXd samples = res.u.transpose();
  reg.v = fit_legendre(grid, samples, fit_degree);
  reg.fit_rms = reg.v.rms;
  reg.v0 = reg.v.eval<double>(grid.center)[0];
  auto fit = std::make_shared<const LegendreFit>(reg.v);
  const double v0 = reg.v0;
  ScalarField w;
  w.chart = g_hat.chart;
  w.value_fn = [fit, v0](const Vec3& p) { return fit->eval<double>(p)[0] / v0; };
  w.jet_fn = [fit, v0](const Vec3J& p) { return JetD(fit->eval<JetD>(p)[0] / v0); };
  w.label = "v";
  reg.metric = conformal(gt, w);
  reg.metric.label = "regularized(" + g_hat.label + ")";
  return reg;
}

Decompactification decompactify(const MetricField& g_hat, const std::vector<double>& radii, const SphereRule& sphere) {
  double a = 1.0, b = 0.0;
  if (const auto* pb = std::get_if<PuncturedBall>(&g_hat.chart.domain)) {
    a = pb->radius;
    b = pb->puncture_radius;
  }
  Chart zbar = Chart::annulus("zbar", ChartKind::decompactified_zbar, 1.0 / a, b > 0.0 ? 1.0 / b : 1e6,
                              g_hat.chart.resolution);
  CoordinateMap k = inversion(zbar, g_hat.chart);
  ScalarField f = make_scalar(zbar, [](const auto& z) { return norm3(z); }, "|zbar|");
  Decompactification d;
  d.gamma = conformal(pullback(g_hat, k), f);
  d.gamma.chart = zbar;
  d.gamma.label = "gamma";
  if (radii.size() >= 2) {
    const MetricField& gm = d.gamma;
    d.remainder = decay_fit([&gm](const Vec3& p) { return max_abs_offset(gm(p)); }, radii, sphere, 1e-13);
  }
  return d;
}

ScalarField conformal_factor(const MetricField& g, const MetricField& gamma) {
  ScalarField u;
  u.chart = g.chart;
  u.value_fn = [g, gamma](const Vec3& p) {
    double t = (gamma(p).inverse() * g(p)).trace() / 3.0;
    return std::pow(t, 0.25);
  };
  u.jet_fn = [g, gamma](const Vec3J& p) {
    Mat3J gi = inv3<JetD>(gamma.jet(p));
    Mat3J m = g.jet(p);
    JetD t(0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t += gi(i, j) * m(j, i);
    return pow(t * (1.0 / 3.0), 0.25);
  };
  u.label = "u";
  return u;
}

namespace {

ConformalExpansion fit_shells(const std::vector<double>& radii, const std::vector<double>& avg,
                              const std::vector<std::vector<double>>& pointwise) {
  ConformalExpansion e;
  e.radii = radii;
  e.u_minus_one = avg;
  double top = 0.0;
  for (double v : avg) top = std::max(top, std::abs(v));
  if (top > 1e-13) {
    MonopoleFit m = fit_monopole(radii, avg);
    e.C = m.a;
    e.fit_residual = m.rms;
  } else {
    // Roundoff data: the correction term is not identifiable, project on 1/r alone.
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < radii.size(); ++i) {
      num += avg[i] / radii[i];
      den += 1.0 / (radii[i] * radii[i]);
    }
    e.C = num / den;
    e.fit_residual = top;
  }
  std::vector<double> sup(radii.size(), 0.0);
  double scale = 0.0;
  for (size_t i = 0; i < radii.size(); ++i) {
    for (double v : pointwise[i]) sup[i] = std::max(sup[i], std::abs(v - e.C / radii[i]));
    scale = std::max(scale, std::abs(avg[i]));
  }
  DecayFit d = decay_fit(radii, sup, 1e-13 * std::max(1.0, scale));
  e.remainder_exponent = d.vanishing ? INFINITY : d.exponent;
  e.alpha = std::min(1.0, e.remainder_exponent - 1.0);
  return e;
}

}  // namespace

ConformalExpansion fit_conformal_factor(const std::function<double(const Vec3&)>& u, const std::vector<double>& radii,
                                        const SphereRule& s) {
  const Eigen::Index ns = s.size();
  std::vector<double> vals(radii.size() * ns);
  parallel_for(static_cast<long>(vals.size()), [&](long n) { vals[n] = u(radii[n / ns] * s.dirs.col(n % ns)) - 1.0; });
  std::vector<double> avg(radii.size(), 0.0);
  std::vector<std::vector<double>> pw(radii.size());
  for (size_t i = 0; i < vals.size(); ++i) {
    avg[i / ns] += s.weights[i % ns] / (4.0 * M_PI) * vals[i];
    pw[i / ns].push_back(vals[i]);
  }
  return fit_shells(radii, avg, pw);
}

ConformalExpansion fit_conformal_factor(const MetricField& g, const MetricField& gamma,
                                        const std::vector<double>& radii, const SphereRule& s) {
  const Eigen::Index ns = s.size();
  std::vector<double> vals(radii.size() * ns), defect(vals.size());
  parallel_for(static_cast<long>(vals.size()), [&](long n) {
    Vec3 p = radii[n / ns] * s.dirs.col(n % ns);
    Mat3 m = gamma(p).inverse() * g(p);
    double t = m.trace() / 3.0;
    defect[n] = (m - t * Mat3::Identity()).cwiseAbs().maxCoeff() / t;
    vals[n] = std::pow(t, 0.25) - 1.0;
  });
  double worst = 0.0;
  for (double v : defect) worst = std::max(worst, v);
  if (worst > 1e-6)
    throw StageError("fit", "g = u^4 gamma", "traceless part of gamma^-1 g is " + std::to_string(worst) + " relative");
  std::vector<double> avg(radii.size(), 0.0);
  std::vector<std::vector<double>> pw(radii.size());
  for (size_t i = 0; i < vals.size(); ++i) {
    avg[i / ns] += s.weights[i % ns] / (4.0 * M_PI) * vals[i];
    pw[i / ns].push_back(vals[i]);
  }
  ConformalExpansion e = fit_shells(radii, avg, pw);
  e.traceless_defect = worst;
  return e;
}

MassResult mass_constant(const MetricField& g, const MetricField& gamma, const ScalarField& u, const MassOptions& opt,
                         const std::function<double(const Vec3&)>& scalar_g) {
  MassResult m;
  RadialRule rr(dyadic_breaks(opt.inner_radius, opt.truncation), opt.radial_per_panel);
  SphereRule s(opt.sphere_n);
  const Eigen::Index ns = s.size();
  const size_t nr = rr.r.size();
  std::vector<double> integrand(nr * ns);
  parallel_for(static_cast<long>(integrand.size()), [&](long n) {
    Vec3 p = rr.r[n / ns] * s.dirs.col(n % ns);
    double rg = scalar_g ? scalar_g(p) : scalar_curvature_at(g, p);
    double rgam = scalar_curvature_at(gamma, p);
    double uv = u(p);
    double vol = std::sqrt(gamma(p).determinant());
    integrand[n] = (rg * std::pow(uv, 5) - rgam * uv) * vol;
  });
  std::vector<double> shell(nr, 0.0), sup(nr, 0.0);
  for (size_t n = 0; n < integrand.size(); ++n) {
    size_t i = n / ns;
    shell[i] += s.weights[n % ns] * integrand[n];
    sup[i] = std::max(sup[i], std::abs(integrand[n]));
  }
  for (size_t i = 0; i < nr; ++i) m.volume_term += rr.w[i] * rr.r[i] * rr.r[i] * shell[i];

  // Inner boundary flux of sqrt(gamma) gamma^ij d_j u through the Euclidean sphere.
  std::vector<double> flux(ns);
  const double r0 = opt.inner_radius;
  parallel_for(ns, [&](long j) {
    Vec3 nu = s.dirs.col(j);
    Vec3 p = r0 * nu;
    Mat3 gm = gamma(p);
    JetD uj = u.jet(p);
    Vec3 du(uj.d(0), uj.d(1), uj.d(2));
    flux[j] = s.weights[j] * r0 * r0 * std::sqrt(gm.determinant()) * nu.dot(gm.inverse() * du);
  });
  double f = 0.0;
  for (double v : flux) f += v;
  m.inner_flux = -8.0 * f;
  m.C_truncated = (m.volume_term + m.inner_flux) / (32.0 * M_PI);

  // Tail from the decay of the last two panels.
  std::vector<double> tr, ts;
  int last = rr.panel.back();
  double scale = 0.0;
  for (size_t i = 0; i < nr; ++i) scale = std::max(scale, sup[i]);
  for (size_t i = 0; i < nr; ++i)
    if (rr.panel[i] >= last - 1) {
      tr.push_back(rr.r[i]);
      ts.push_back(sup[i]);
    }
  DecayFit d = decay_fit(tr, ts, 1e-300 + 1e-14 * scale);
  if (d.vanishing) {
    m.integrand_exponent = INFINITY;
    m.tail_convergent = true;
  } else {
    m.integrand_exponent = d.exponent;
    m.tail_convergent = d.exponent > 3.0;
    if (m.tail_convergent) {
      // Signed shell average at the outermost node sets the tail's sign and size.
      double R = opt.truncation;
      double rl = rr.r.back();
      double a = shell.back() * std::pow(rl, d.exponent);
      m.tail_estimate = a * std::pow(R, 3.0 - d.exponent) / (d.exponent - 3.0) / (32.0 * M_PI);
    }
  }
  m.C = m.C_truncated + m.tail_estimate;
  return m;
}

namespace {

template <typename F>
bool stage(MainExpansion& out, const std::string& name, F&& body) {
  try {
    std::string msg = body();
    out.stages.push_back({name, "ok", msg});
    return true;
  } catch (const StageError& e) {
    out.stages.push_back({name, "failed", e.what() + std::string(" [hypothesis: ") + e.hypothesis + "]"});
  } catch (const std::exception& e) {
    out.stages.push_back({name, "failed", e.what()});
  }
  return false;
}

std::string fmt(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

}  // namespace

MainExpansion run_main_expansion(const MetricField& g, const PipelineOptions& opt) {
  MainExpansion out;
  if (!stage(out, "compactify", [&] {
        out.compactification = compactify(g, opt.compactify_options);
        return "g_hat(p_inf) defect " + fmt(out.compactification.pinf_defect);
      }))
    return out;
  const CompactificationResult& comp = out.compactification;
  const double rho = 1.0 / comp.R1;
  BoxGrid grid = BoxGrid::box(opt.grid_n, Vec3::Zero(), rho);
  MetricField ghat = comp.g_hat;

  if (opt.regularize) {
    if (!stage(out, "yamabe_normalize", [&] {
          out.regularization = regularize(comp.g_hat, grid, opt.fit_degree, opt.regularize_tolerance);
          if (!out.regularization.converged)
            throw StageError("yamabe_normalize", "solvable Dirichlet problem",
                             "residual " + fmt(out.regularization.residual));
          ghat = out.regularization.metric;
          ghat.chart = comp.g_hat.chart;
          return "residual " + fmt(out.regularization.residual) + ", fit rms " + fmt(out.regularization.fit_rms);
        }))
      return out;
  }

  CoordinateMap H = identity_map(ghat.chart);
  if (opt.harmonic) {
    if (!stage(out, "harmonic", [&] {
          HarmonicCoordinates hc = harmonic_coordinates(ghat, grid, opt.fit_degree, opt.harmonic_tolerance);
          out.harmonic_residual = hc.residual;
          out.harmonic_fit_rms = hc.fit.rms;
          out.harmonic_jacobian = hc.jacobian_center;
          if (hc.residual > 1e-8)
            throw StageError("harmonic", "Delta_g y = 0", "residual " + fmt(hc.residual));
          H = hc.map;
          return "residual " + fmt(hc.residual) + ", fit rms " + fmt(hc.fit.rms);
        }))
      return out;
  }

  CoordinateMap N = identity_map(ghat.chart);
  if (opt.normal) {
    if (!stage(out, "normal", [&] {
          MetricField gy = pullback(ghat, inverse_map(H));
          gy.chart = ghat.chart;
          NormalCoordinates nc;
          try {
            nc = normal_coordinates(gy, Vec3::Zero(), true, 1e-3, opt.normal_tolerance);
          } catch (const std::domain_error& e) {
            throw StageError("normal", "g_hat(0) = delta", e.what());
          }
          out.normal_metric_defect = nc.metric_defect;
          out.normal_dg = nc.dg_after;
          N = nc.map;
          return "metric defect " + fmt(nc.metric_defect) + ", |dg(0)| " + fmt(nc.dg_after);
        }))
      return out;
  }
  if (!opt.decompactify) {
    out.ok = true;
    return out;
  }

  const Chart zchart = g.chart;
  CoordinateMap M = compose(N, H);  // x -> ybar
  CoordinateMap Minv = inverse_map(M);
  const double r_in = zchart.inner_radius(), r_out = zchart.outer_radius();
  const double fit_outer = std::min(opt.fit_outer, r_out);
  const std::vector<double> radii = geometric_radii(opt.fit_inner, fit_outer, opt.fit_shells);
  if (!stage(out, "decompactify", [&] {
        MetricField gy = pullback(ghat, Minv);
        gy.chart = ghat.chart;
        Decompactification d = decompactify(gy, radii);
        out.gamma = d.gamma;
        Chart zbar = Chart::annulus("zbar", ChartKind::decompactified_zbar, r_in, r_out, zchart.resolution);
        out.gamma.chart = zbar;
        CoordinateMap kz = inversion(zbar, ghat.chart);       // zbar -> ybar
        CoordinateMap phi = compose(Minv, kz);               // zbar -> x
        CoordinateMap back = compose(inversion(ghat.chart, zchart), phi);  // zbar -> z
        out.g_zbar = pullback(g, back);
        out.g_zbar.chart = zbar;
        out.zbar_map = compose(inversion(ghat.chart, zbar), compose(M, inversion(zchart, ghat.chart)));
        out.zbar_map.backward_fn = back.forward_fn;
        out.zbar_map.label = "zbar";
        std::string rem = d.remainder.vanishing ? "vanishing" : fmt(d.remainder.exponent);
        return "gamma - delta decay exponent " + rem;
      }))
    return out;

  if (opt.fit) {
    if (!stage(out, "fit", [&] {
          out.expansion = fit_conformal_factor(out.g_zbar, out.gamma, radii);
          // Trace coefficient and remainder of g in zbar.
          SphereRule s(12);
          const Eigen::Index ns = s.size();
          std::vector<Mat3> gv(radii.size() * ns);
          const MetricField& gz = out.g_zbar;
          parallel_for(static_cast<long>(gv.size()), [&](long n) { gv[n] = gz(Vec3(radii[n / ns] * s.dirs.col(n % ns))); });
          std::vector<double> tr(radii.size(), 0.0);
          for (size_t n = 0; n < gv.size(); ++n) tr[n / ns] += s.weights[n % ns] / (4.0 * M_PI) * (gv[n].trace() / 3.0 - 1.0);
          out.trace_coefficient = fit_monopole(radii, tr).a;
          std::vector<double> sup(radii.size(), 0.0);
          for (size_t n = 0; n < gv.size(); ++n) {
            double r = radii[n / ns];
            sup[n / ns] = std::max(sup[n / ns], max_abs_offset(gv[n] - out.trace_coefficient / r * Mat3::Identity()));
          }
          out.remainder = decay_fit(radii, sup, 1e-13);
          std::vector<double> cr = geometric_radii(opt.fit_inner, std::min(128.0, r_out), 8);
          out.map_class = classify_map(out.zbar_map, cr, SphereRule(8));
          if (!out.map_class.compatible)
            throw StageError("fit", "zbar(z) - z = O(r^(1-alpha))", "zbar map not classified compatible");
          return "C " + fmt(out.expansion.C) + ", 4C coefficient " + fmt(out.trace_coefficient) + ", alpha " +
                 fmt(out.expansion.alpha);
        }))
      return out;
  }

  if (opt.mass) {
    if (!stage(out, "mass", [&] {
          MassOptions mo = opt.mass_options;
          mo.truncation = std::min(mo.truncation, r_out);
          ScalarField u = conformal_factor(out.g_zbar, out.gamma);
          auto zfun = out.zbar_map.backward_fn;
          auto rg = [&g, zfun](const Vec3& p) { return scalar_curvature_at(g, zfun(p)); };
          out.mass = mass_constant(out.g_zbar, out.gamma, u, mo, rg);
          if (!out.mass.tail_convergent)
            throw StageError("mass", "R_g in L^r_{-3-eps}",
                             "integrand decay exponent " + fmt(out.mass.integrand_exponent) + " <= 3");
          return "C " + fmt(out.mass.C) + ", tail " + fmt(out.mass.tail_estimate);
        }))
      return out;
  }

  if (opt.charges) {
    if (!stage(out, "charges", [&] {
          std::vector<double> cr = opt.charge_radii;
          if (cr.empty())
            for (double r = 4.0 * r_in; r <= r_out * (1 + 1e-12); r *= 2.0) cr.push_back(r);
          out.charges = adm_com(g, cr);
          out.expansion.energy_cross = out.charges.energy - 2.0 * out.expansion.C;
          return "E " + fmt(out.charges.energy) + ", E - 2C " + fmt(out.expansion.energy_cross);
        }))
      return out;
  }
  out.ok = true;
  return out;
}

}  // namespace aegeo
