#include "aegeo/catalog.hpp"

#include <stdexcept>

namespace aegeo {

Family parse_family(const std::string& name) {
  if (name == "euclidean") return Family::euclidean;
  if (name == "conformally_flat_ae") return Family::conformally_flat_ae;
  if (name == "conformally_flat_translated") return Family::conformally_flat_translated;
  if (name == "first_order_schwarzschildian") return Family::first_order_schwarzschildian;
  if (name == "torus_conformal") return Family::torus_conformal;
  throw std::invalid_argument("unknown metric family '" + name + "'");
}

const char* to_string(Family f) {
  switch (f) {
    case Family::euclidean: return "euclidean";
    case Family::conformally_flat_ae: return "conformally_flat_ae";
    case Family::conformally_flat_translated: return "conformally_flat_translated";
    case Family::first_order_schwarzschildian: return "first_order_schwarzschildian";
    case Family::torus_conformal: return "torus_conformal";
  }
  return "?";
}

Chart default_chart(Family f) {
  if (f == Family::torus_conformal) return Chart::torus("torus", 1.0, 16);
  return Chart::annulus("z", ChartKind::asymptotic_z, 1.0, 128.0);
}

namespace {

void need(const std::vector<double>& p, size_t n, Family f) {
  if (p.size() != n)
    throw std::invalid_argument(std::string(to_string(f)) + " takes " + std::to_string(n) + " parameters");
  for (double v : p)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(to_string(f)) + ": parameters must be finite");
}

}  // namespace

MetricField make_catalog_metric(Family f, const std::vector<double>& params, const Chart& chart) {
  MetricField g;
  switch (f) {
    case Family::euclidean:
      need(params, 0, f);
      g = make_metric(chart, Euclidean{}, "euclidean");
      break;
    case Family::conformally_flat_ae:
      need(params, 1, f);
      if (params[0] <= -1.0) throw std::invalid_argument("conformally_flat_ae: need C > -1 for u > 0");
      g = make_metric(chart, ConformallyFlatAE{params[0]}, "conformally_flat_ae");
      break;
    case Family::conformally_flat_translated:
      need(params, 4, f);
      if (params[0] <= -1.0) throw std::invalid_argument("conformally_flat_translated: need C > -1 for u > 0");
      g = make_metric(chart, ConformallyFlatAE{params[0], Vec3(params[1], params[2], params[3])},
                      "conformally_flat_translated");
      break;
    case Family::first_order_schwarzschildian:
      need(params, 2, f);
      g = make_metric(chart, FirstOrderSchwarzschildian{params[0], params[1]}, "first_order_schwarzschildian");
      g.decay_tag = 1.0;
      break;
    case Family::torus_conformal: {
      if (params.size() != 1 && params.size() != 2)
        throw std::invalid_argument("torus_conformal takes a or (a, period)");
      double L = params.size() == 2 ? params[1] : 1.0;
      if (!(std::abs(params[0]) < 1.0) || !(L > 0)) throw std::invalid_argument("torus_conformal: need |a| < 1");
      g = make_metric(chart, TorusConformal{params[0], L}, "torus_conformal");
      break;
    }
  }
  if (f == Family::conformally_flat_ae || f == Family::conformally_flat_translated) g.decay_tag = 1.0;
  require_spd(g, chart.nodes());
  return g;
}

MetricField make_catalog_metric(Family f, const std::vector<double>& params) {
  Chart c = default_chart(f);
  if (f == Family::torus_conformal && params.size() == 2) c = Chart::torus("torus", params[1], 16);
  return make_catalog_metric(f, params, c);
}

MetricField make_catalog_metric(const std::string& family, const std::vector<double>& params) {
  return make_catalog_metric(parse_family(family), params);
}

}  // namespace aegeo
