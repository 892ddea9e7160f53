#include "aegeo/cli.hpp"

#include "aegeo/catalog.hpp"
#include "aegeo/charges.hpp"
#include "aegeo/conformal.hpp"
#include "aegeo/curvature.hpp"
#include "aegeo/elliptic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace aegeo {

using nlohmann::json;

const char* version() { return "0.1.0"; }

namespace {

const std::set<std::string> stage_names = {"compactify", "yamabe_normalize", "harmonic", "normal",
                                           "decompactify", "fit", "charges"};
const std::set<std::string> tolerance_names = {"compactify", "harmonic", "normal", "yamabe", "charges"};

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json vec(const Vec3& v) { return json::array({num(v[0]), num(v[1]), num(v[2])}); }

json mat(const Mat3& m) {
  json a = json::array();
  for (int i = 0; i < 3; ++i) a.push_back(json::array({num(m(i, 0)), num(m(i, 1)), num(m(i, 2))}));
  return a;
}

json constant(double v, const char* unit) { return {{"value", num(v)}, {"unit", unit}}; }

json decay_json(const DecayFit& f) {
  return {{"exponent", num(f.vanishing ? INFINITY : f.exponent)},
          {"amplitude", num(f.amplitude)},
          {"residual", num(f.residual)},
          {"vanishing", f.vanishing}};
}

void add_decay_rows(RunReport& r, const DecayFit& f, const std::string& component) {
  for (size_t i = 0; i < f.radii.size() && i < f.log_sup.size(); ++i)
    r.decay.push_back({std::log(f.radii[i]), f.log_sup[i], component});
}

template <typename T>
T get(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field, "wrong type");
  }
}

void require_object(const json& j, const std::string& field, const std::set<std::string>& keys) {
  if (!j.is_object()) throw ConfigError(field, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError(field.empty() ? it.key() : field + "." + it.key(), "unknown field");
}

std::string hash_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(h));
  return b;
}

Chart make_chart(const RunConfig& c) {
  Resolution res{c.radial_nodes, c.angular_nodes};
  if (c.domain == "torus") return Chart::torus("torus", c.period, c.torus_nodes);
  return Chart::annulus("z", ChartKind::asymptotic_z, c.r_in, c.r_out, res);
}

}  // namespace

std::vector<double> RunConfig::effective_radii() const {
  if (!radii.empty()) return radii;
  return dyadic_radii(radii_r0, radii_count);
}

void RunConfig::validate() const {
  Family f;
  try {
    f = parse_family(family);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("metric.family", e.what());
  }
  if (domain != "annulus" && domain != "torus") throw ConfigError("chart.domain", "must be annulus or torus");
  if ((f == Family::torus_conformal) != (domain == "torus"))
    throw ConfigError("chart.domain", "torus_conformal lives on a torus; the AE families on an annulus");
  if (domain == "annulus") {
    if (!(r_in > 0.0) || !(r_out > r_in)) throw ConfigError("chart", "need 0 < r_in < r_out");
    if (radial_nodes < 2 || angular_nodes < 2) throw ConfigError("chart.resolution", "need at least 2 nodes");
    std::vector<double> r = effective_radii();
    if (r.size() < 2) throw ConfigError("radii", "need at least 2 radii");
    for (size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] >= r_in && r[i] <= r_out))
        throw ConfigError("radii", "radius " + std::to_string(r[i]) + " outside chart [" + std::to_string(r_in) + ", " +
                                       std::to_string(r_out) + "]");
      if (i && !(r[i] > r[i - 1])) throw ConfigError("radii", "radii must be increasing");
    }
  } else {
    if (!(period > 0.0)) throw ConfigError("chart.period", "must be positive");
    if (torus_nodes < 4) throw ConfigError("chart.nodes", "need at least 4 nodes per axis");
  }
  bool any = false;
  for (const auto& [k, v] : stages) {
    if (!stage_names.count(k)) throw ConfigError("pipeline." + k, "unknown stage");
    any = any || v;
  }
  if (!any) throw ConfigError("pipeline", "at least one stage must be enabled");
  for (const auto& [k, v] : tolerances) {
    if (!tolerance_names.count(k)) throw ConfigError("tolerances." + k, "unknown stage");
    if (!(v > 0.0)) throw ConfigError("tolerances." + k, "must be positive");
  }
  for (const auto& fm : formats)
    if (fm != "json" && fm != "csv") throw ConfigError("output.formats", "unknown format '" + fm + "'");
  try {
    make_catalog_metric(f, params, make_chart(*this));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("metric.params", e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError("metric", e.what());
  }
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  require_object(j, "", {"metric", "chart", "radii", "pipeline", "tolerances", "output"});
  if (!j.contains("metric")) throw ConfigError("metric", "required");
  const json& m = j["metric"];
  if (m.is_string()) {
    c.family = m.get<std::string>();
  } else {
    require_object(m, "metric", {"family", "params"});
    if (!m.contains("family")) throw ConfigError("metric.family", "required");
    c.family = get<std::string>(m["family"], "metric.family");
    if (m.contains("params")) c.params = get<std::vector<double>>(m["params"], "metric.params");
  }
  try {
    parse_family(c.family);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("metric.family", e.what());
  }
  if (c.family == "torus_conformal") {
    c.domain = "torus";
    if (c.params.size() == 2) c.period = c.params[1];
  }
  if (j.contains("chart")) {
    const json& ch = j["chart"];
    require_object(ch, "chart", {"domain", "r_in", "r_out", "period", "nodes", "resolution"});
    if (ch.contains("domain")) c.domain = get<std::string>(ch["domain"], "chart.domain");
    if (ch.contains("r_in")) c.r_in = get<double>(ch["r_in"], "chart.r_in");
    if (ch.contains("r_out")) c.r_out = get<double>(ch["r_out"], "chart.r_out");
    if (ch.contains("period")) c.period = get<double>(ch["period"], "chart.period");
    if (ch.contains("nodes")) c.torus_nodes = get<int>(ch["nodes"], "chart.nodes");
    if (ch.contains("resolution")) {
      const json& r = ch["resolution"];
      require_object(r, "chart.resolution", {"radial_nodes", "angular_nodes"});
      if (r.contains("radial_nodes")) c.radial_nodes = get<int>(r["radial_nodes"], "chart.resolution.radial_nodes");
      if (r.contains("angular_nodes")) c.angular_nodes = get<int>(r["angular_nodes"], "chart.resolution.angular_nodes");
    }
  }
  if (j.contains("radii")) {
    const json& r = j["radii"];
    if (r.is_array()) {
      c.radii = get<std::vector<double>>(r, "radii");
    } else {
      require_object(r, "radii", {"r0", "count"});
      if (r.contains("r0")) c.radii_r0 = get<double>(r["r0"], "radii.r0");
      if (r.contains("count")) c.radii_count = get<int>(r["count"], "radii.count");
    }
  }
  if (j.contains("pipeline")) {
    const json& p = j["pipeline"];
    require_object(p, "pipeline", stage_names);
    for (auto it = p.begin(); it != p.end(); ++it) c.stages[it.key()] = get<bool>(it.value(), "pipeline." + it.key());
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    require_object(t, "tolerances", tolerance_names);
    for (auto it = t.begin(); it != t.end(); ++it)
      c.tolerances[it.key()] = get<double>(it.value(), "tolerances." + it.key());
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    require_object(o, "output", {"directory", "formats"});
    if (o.contains("directory")) c.output_dir = get<std::string>(o["directory"], "output.directory");
    if (o.contains("formats")) c.formats = get<std::vector<std::string>>(o["formats"], "output.formats");
  }
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["metric"] = {{"family", c.family}, {"params", c.params}};
  if (c.domain == "torus")
    j["chart"] = {{"domain", "torus"}, {"period", c.period}, {"nodes", c.torus_nodes}};
  else
    j["chart"] = {{"domain", "annulus"},
                  {"r_in", c.r_in},
                  {"r_out", c.r_out},
                  {"resolution", {{"radial_nodes", c.radial_nodes}, {"angular_nodes", c.angular_nodes}}}};
  if (!c.radii.empty())
    j["radii"] = c.radii;
  else
    j["radii"] = {{"r0", c.radii_r0}, {"count", c.radii_count}};
  j["pipeline"] = c.stages;
  j["tolerances"] = c.tolerances;
  j["output"] = {{"directory", c.output_dir}, {"formats", c.formats}};
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "parse error at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
  return config_from_json(j);
}

void apply_radii_flag(RunConfig& c, const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw ConfigError("radii", "expected r0:count");
  try {
    c.radii_r0 = std::stod(spec.substr(0, colon));
    c.radii_count = std::stoi(spec.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("radii", "expected r0:count");
  }
  c.radii.clear();
}

void apply_stage_flag(RunConfig& c, const std::string& spec) {
  if (spec.size() < 2 || (spec[0] != '+' && spec[0] != '-')) throw ConfigError("pipeline", "expected +name or -name");
  std::string name = spec.substr(1);
  if (!stage_names.count(name)) throw ConfigError("pipeline." + name, "unknown stage");
  c.stages[name] = spec[0] == '+';
}

void apply_tol_flag(RunConfig& c, const std::string& spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("tolerances", "expected stage=value");
  std::string name = spec.substr(0, eq);
  if (!tolerance_names.count(name)) throw ConfigError("tolerances." + name, "unknown stage");
  try {
    c.tolerances[name] = std::stod(spec.substr(eq + 1));
  } catch (const std::exception&) {
    throw ConfigError("tolerances." + name, "not a number");
  }
}

void apply_format_flag(RunConfig& c, const std::string& spec) {
  c.formats.clear();
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) c.formats.push_back(item);
}

namespace {

void run_analyze(RunReport& r, const MetricField& g, const RunConfig& cfg) {
  json& d = r.doc["diagnostics"];
  if (cfg.domain == "torus") {
    TensorField R = scalar_curvature(g, g.chart.nodes());
    d["scalar_curvature"] = {{"min", num(R.components.minCoeff())}, {"max", num(R.components.maxCoeff())}};
    r.doc["stages"].push_back({{"name", "analyze"}, {"status", "ok"}, {"message", ""}});
    return;
  }
  std::vector<double> radii = cfg.effective_radii();
  if (radii.size() < 4) throw ConfigError("radii", "decay fits need at least 4 radii");
  SphereRule s = g.chart.sphere();
  DecayFit metric = decay_fit([&g](const Vec3& p) { return (g(p) - Mat3::Identity()).cwiseAbs().maxCoeff(); }, radii,
                              s, 1e-300);
  DecayFit scalar = decay_fit([&g](const Vec3& p) { return std::abs(scalar_curvature_at(g, p)); }, radii, s, 1e-300);
  DecayFit cot = decay_fit(
      [&g](const Vec3& p) {
        PointCurvature c = curvature_at(g, p);
        double n = 0.0;
        for (const Mat3& m : c.cotton) n += m.squaredNorm();
        return std::sqrt(n);
      },
      radii, s, 1e-300);
  add_decay_rows(r, metric, "metric");
  add_decay_rows(r, scalar, "scalar_curvature");
  add_decay_rows(r, cot, "cotton");
  CottonAdmissibility adm = cotton_admissible(g, -4.5);
  d["decay"] = {{"metric", decay_json(metric)}, {"scalar_curvature", decay_json(scalar)}, {"cotton", decay_json(cot)}};
  d["cotton_admissible"] = {{"sigma", -4.5}, {"p1", num(adm.p1)}, {"admissible", adm.admissible},
                            {"norm", num(adm.norm)}, {"divergence_flag", adm.detail.divergence_flag}};
  d["schur_residual"] = num(schur_residual(g, shell_nodes(radii, SphereRule(8))));
  r.doc["stages"].push_back({{"name", "analyze"}, {"status", "ok"}, {"message", ""}});
}

void fill_charges(RunReport& r, const AdmCharges& c) {
  for (size_t i = 0; i < c.radii.size(); ++i) {
    double gap = 0.0;
    if (i) gap = std::max(c.energy_gaps[i - 1], c.com_gaps.empty() ? 0.0 : c.com_gaps[i - 1]);
    Vec3 cp = c.com_partials.empty() ? Vec3::Zero() : c.com_partials[i];
    r.charges.push_back({c.radii[i], c.energy_partials[i], cp[0], cp[1], cp[2], gap});
  }
  json& k = r.doc["constants"];
  k["E"] = constant(c.energy, "length");
  if (c.com_normalized)
    k["COM"] = {{"value", vec(c.com)}, {"unit", "length"}, {"withheld", false}};
  else
    k["COM"] = {{"value", nullptr}, {"unit", "length"}, {"withheld", true}, {"numerator", vec(c.com_numerator)}};
  json& d = r.doc["diagnostics"]["charges"];
  d["energy_converged"] = c.energy_converged;
  d["com_converged"] = c.com_converged;
  d["energy_gaps"] = c.energy_gaps;
  d["com_gaps"] = c.com_gaps;
  d["energy_partials"] = c.energy_partials;
}

void run_charges(RunReport& r, const MetricField& g, const RunConfig& cfg) {
  ChargeOptions opt;
  opt.tolerance = cfg.tolerances.at("charges");
  std::vector<double> radii = cfg.effective_radii();
  AdmCharges c = adm_com(g, radii, opt);
  fill_charges(r, c);
  ComDiagnostic diag = com_convergence_diag(g, radii, opt);
  json moments = json::array();
  for (const Vec3& m : diag.moments) moments.push_back(vec(m));
  r.doc["diagnostics"]["com_convergence"] = {{"annulus_inner", diag.annulus_inner},
                                             {"annulus_outer", diag.annulus_outer},
                                             {"moments", moments},
                                             {"gap_residuals", diag.gap_residuals},
                                             {"alpha", num(diag.alpha)},
                                             {"scalar_l1_norm", num(diag.scalar_norm.value)},
                                             {"moment_integrable", diag.moment_integrable},
                                             {"gaps_bounded", diag.gaps_bounded}};
  r.doc["stages"].push_back({{"name", "charges"}, {"status", "ok"}, {"message", ""}});
}

void run_compactify(RunReport& r, const MetricField& g, const RunConfig& cfg) {
  CompactifyOptions opt;
  opt.check_cotton = true;
  opt.pinf_tolerance = cfg.tolerances.at("compactify");
  CompactificationResult c = compactify(g, opt);
  r.doc["diagnostics"]["compactify"] = {{"R0", c.R0},
                                        {"R1", c.R1},
                                        {"g_hat_at_pinf", mat(c.g_hat_at_pinf)},
                                        {"pinf_defect", num(c.pinf_defect)},
                                        {"phi_tilde_at_pinf", num(c.phi_tilde_at_pinf)},
                                        {"decay_exponent", num(c.decay_exponent)},
                                        {"cotton_admissible", c.cotton.admissible},
                                        {"cotton_p1", num(c.cotton.p1)}};
  r.doc["stages"].push_back({{"name", "compactify"}, {"status", "ok"}, {"message", ""}});
}

void run_expand(RunReport& r, const MetricField& g, const RunConfig& cfg) {
  if (!cfg.stages.at("compactify")) throw ConfigError("pipeline.compactify", "expand needs the compactify stage");
  PipelineOptions opt;
  opt.regularize = cfg.stages.at("yamabe_normalize");
  opt.harmonic = cfg.stages.at("harmonic");
  opt.normal = cfg.stages.at("normal");
  opt.decompactify = cfg.stages.at("decompactify");
  opt.fit = cfg.stages.at("fit");
  opt.mass = cfg.stages.at("fit");
  opt.charges = cfg.stages.at("charges");
  opt.harmonic_tolerance = cfg.tolerances.at("harmonic");
  opt.normal_tolerance = cfg.tolerances.at("normal");
  opt.regularize_tolerance = cfg.tolerances.at("yamabe");
  opt.compactify_options.pinf_tolerance = cfg.tolerances.at("compactify");
  opt.charge_radii = cfg.effective_radii();
  MainExpansion out = run_main_expansion(g, opt);

  std::map<std::string, StageRecord> seen;
  for (const auto& s : out.stages) seen[s.name] = s;
  const std::vector<std::pair<std::string, std::string>> order = {
      {"compactify", "compactify"}, {"yamabe_normalize", "yamabe_normalize"}, {"harmonic", "harmonic"},
      {"normal", "normal"},         {"decompactify", "decompactify"},         {"fit", "fit"},
      {"fit", "mass"},              {"charges", "charges"}};
  for (const auto& [toggle, name] : order) {
    if (!cfg.stages.at(toggle)) continue;
    auto it = seen.find(name);
    if (it == seen.end())
      r.doc["stages"].push_back({{"name", name}, {"status", "not_run"}, {"message", "an earlier stage failed"}});
    else
      r.doc["stages"].push_back({{"name", name}, {"status", it->second.status}, {"message", it->second.message}});
  }
  json& d = r.doc["diagnostics"];
  const auto& c = out.compactification;
  d["compactify"] = {{"R0", c.R0}, {"R1", c.R1}, {"pinf_defect", num(c.pinf_defect)},
                     {"decay_exponent", num(c.decay_exponent)}};
  if (seen.count("yamabe_normalize"))
    d["yamabe_normalize"] = {{"residual", num(out.regularization.residual)},
                             {"fit_rms", num(out.regularization.fit_rms)}};
  if (seen.count("harmonic"))
    d["harmonic"] = {{"residual", num(out.harmonic_residual)}, {"fit_rms", num(out.harmonic_fit_rms)},
                     {"jacobian_center", mat(out.harmonic_jacobian)}};
  if (seen.count("normal"))
    d["normal"] = {{"metric_defect", num(out.normal_metric_defect)}, {"dg_after", num(out.normal_dg)}};
  json& k = r.doc["constants"];
  if (seen.count("fit") && seen["fit"].status == "ok") {
    k["C"] = constant(out.expansion.C, "length");
    k["alpha"] = constant(out.expansion.alpha, "dimensionless");
    k["trace_coefficient_4C"] = constant(out.trace_coefficient, "length");
    d["fit"] = {{"fit_residual", num(out.expansion.fit_residual)},
                {"remainder_exponent", num(out.expansion.remainder_exponent)},
                {"traceless_defect", num(out.expansion.traceless_defect)},
                {"metric_remainder", decay_json(out.remainder)},
                {"zbar_map", {{"leading", out.map_class.leading},
                              {"alpha", num(out.map_class.alpha)},
                              {"compatible", out.map_class.compatible}}}};
    add_decay_rows(r, out.remainder, "g_zbar_remainder");
    add_decay_rows(r, out.map_class.displacement, "zbar_displacement");
  }
  if (seen.count("mass") && seen["mass"].status == "ok") {
    k["C_mass"] = constant(out.mass.C, "length");
    d["mass"] = {{"C_truncated", num(out.mass.C_truncated)},
                 {"tail_estimate", num(out.mass.tail_estimate)},
                 {"integrand_exponent", num(out.mass.integrand_exponent)},
                 {"fit_agreement", num(std::abs(out.mass.C - out.expansion.C))}};
  }
  if (seen.count("charges") && seen["charges"].status == "ok") {
    fill_charges(r, out.charges);
    k["energy_cross"] = constant(out.expansion.energy_cross, "length");
  }
  r.ok = out.ok;
}

void run_yamabe(RunReport& r, const MetricField& g, const RunConfig& cfg) {
  if (cfg.domain != "torus") throw ConfigError("chart.domain", "yamabe needs a torus metric");
  YamabeOptions opt;
  opt.tolerance = cfg.tolerances.at("yamabe");
  YamabeResult y = yamabe_first_eigen(g, BoxGrid::torus(cfg.torus_nodes, cfg.period), opt);
  r.doc["constants"]["lambda"] = constant(y.lambda, "length^-2");
  r.doc["diagnostics"]["yamabe"] = {{"rayleigh_residual", num(y.rayleigh_residual)},
                                    {"pde_residual", num(y.pde_residual)},
                                    {"iterations", y.iterations},
                                    {"positive", y.positive},
                                    {"shift", num(y.shift)},
                                    {"eigenfunction_min", num(y.eigenfunction.minCoeff())},
                                    {"eigenfunction_max", num(y.eigenfunction.maxCoeff())}};
  bool good = y.converged && y.positive;
  r.doc["stages"].push_back({{"name", "yamabe"},
                             {"status", good ? "ok" : "failed"},
                             {"message", good ? "" : (y.positive ? "iteration budget exhausted"
                                                                  : "eigenfunction has a non-positive node")}});
  r.ok = good;
}

}  // namespace

RunReport run(const RunConfig& config, const std::string& command) {
  auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  r.command = command;
  r.doc["command"] = command;
  r.doc["config"] = config_to_json(config);
  r.doc["stages"] = json::array();
  r.doc["constants"] = json::object();
  r.doc["diagnostics"] = json::object();
  MetricField g = make_catalog_metric(parse_family(config.family), config.params, make_chart(config));
  r.ok = true;
  try {
    if (command == "analyze") run_analyze(r, g, config);
    else if (command == "charges") run_charges(r, g, config);
    else if (command == "compactify") run_compactify(r, g, config);
    else if (command == "expand") run_expand(r, g, config);
    else if (command == "yamabe") run_yamabe(r, g, config);
    else throw ConfigError("command", "unknown command '" + command + "'");
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError& e) {
    r.ok = false;
    r.doc["stages"].push_back({{"name", e.stage}, {"status", "failed"},
                               {"message", std::string(e.what()) + " [hypothesis: " + e.hypothesis + "]"}});
  } catch (const std::exception& e) {
    r.ok = false;
    r.doc["stages"].push_back({{"name", command}, {"status", "failed"}, {"message", e.what()}});
  }
  r.doc["status"] = r.ok ? "ok" : "failed";
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json hashed = r.doc["config"];
  hashed.erase("output");
  r.doc["provenance"] = {{"config_hash", hash_hex(hashed.dump())}, {"version", version()},
                         {"wall_time_s", wall}};
  return r;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

std::string g17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

}  // namespace

void emit_outputs(const RunReport& report, const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
  auto wants = [&](const char* f) {
    for (const auto& x : config.formats)
      if (x == f) return true;
    return false;
  };
  if (wants("json")) write_file(dir / "report.json", report.doc.dump(2) + "\n");
  if (wants("csv")) {
    if (report.ok && !report.charges.empty()) {
      std::string s = std::string(charges_header) + "\n";
      for (const auto& c : report.charges)
        s += g17(c.radius) + "," + g17(c.energy) + "," + g17(c.cx) + "," + g17(c.cy) + "," + g17(c.cz) + "," +
             g17(c.gap) + "\n";
      write_file(dir / "charges.csv", s);
    }
    if (!report.decay.empty()) {
      std::string s = std::string(decay_header) + "\n";
      for (const auto& d : report.decay) s += g17(d.log_r) + "," + g17(d.log_sup) + "," + d.component + "\n";
      write_file(dir / "decay.csv", s);
    }
  }
}

std::vector<SelftestCase> selftest() {
  std::vector<SelftestCase> out;
  auto check = [&out](const std::string& name, auto&& body) {
    try {
      auto [ok, detail] = body();
      out.push_back({name, ok, detail});
    } catch (const std::exception& e) {
      out.push_back({name, false, e.what()});
    }
  };
  auto str = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return std::string(b);
  };
  const MetricField flat = make_catalog_metric(Family::euclidean, {});
  check("sphere quadrature integrates 1 to 4 pi", [&] {
    SphereRule s(16);
    double e = std::abs(s.weights.sum() - 4.0 * M_PI);
    return std::pair{e <= 1e-12, str(e)};
  });
  check("flat metric has zero curvature", [&] {
    PointCurvature c = curvature_at(flat, Vec3(3.0, -2.0, 5.0));
    double e = c.riemann[0][1].cwiseAbs().maxCoeff() + std::abs(c.scalar);
    return std::pair{e == 0.0, str(e)};
  });
  check("flat Laplacian of |z|^2 is 6", [&] {
    ScalarField u = make_scalar(flat.chart, [](const auto& z) { return z[0] * z[0] + z[1] * z[1] + z[2] * z[2]; });
    double e = std::abs(laplacian_at(flat, u, Vec3(2.0, 3.0, 4.0)) - 6.0);
    return std::pair{e <= 1e-12, str(e)};
  });
  check("dirichlet with constant data is constant", [&] {
    EllipticProblem pb;
    pb.metric = flat;
    pb.grid = BoxGrid::box(9, Vec3::Zero(), 1.0);
    pb.boundary = [](const Vec3&) { return 1.0; };
    DirichletResult r = dirichlet_solve(pb);
    double e = (r.u.array() - 1.0).abs().maxCoeff();
    return std::pair{e <= 1e-12, str(e)};
  });
  check("harmonic coordinates of delta are the identity", [&] {
    HarmonicCoordinates hc = harmonic_coordinates(flat, BoxGrid::box(9, Vec3::Zero(), 1.0), 2);
    double e = (hc.y - hc.grid.points()).cwiseAbs().maxCoeff();
    return std::pair{e <= 1e-10, str(e)};
  });
  check("compactified delta is delta", [&] {
    CompactificationResult c = compactify(flat);
    double e = (c.g_hat(Vec3(0.1, -0.05, 0.02)) - Mat3::Identity()).cwiseAbs().maxCoeff();
    return std::pair{e <= 1e-12, str(e)};
  });
  check("flat ADM energy vanishes", [&] {
    double e = std::abs(adm_energy(flat, dyadic_radii(4, 4)).energy);
    return std::pair{e <= 1e-12, str(e)};
  });
  check("flat torus first eigenvalue is zero", [&] {
    MetricField t = make_catalog_metric(Family::torus_conformal, {0.0});
    YamabeResult y = yamabe_first_eigen(t, BoxGrid::torus(8, 1.0));
    return std::pair{std::abs(y.lambda) <= 1e-10 && y.positive, str(y.lambda)};
  });
  check("minimal config gets defaults", [&] {
    RunConfig c = config_from_json(json{{"metric", "euclidean"}});
    bool ok = c.r_in == 1.0 && c.r_out == 128.0 && c.effective_radii().size() == 6;
    return std::pair{ok, std::string()};
  });
  return out;
}

}  // namespace aegeo
