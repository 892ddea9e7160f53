#pragma once

#include "json.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aegeo {

// Bad configuration; field is the dotted path of the offending entry.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field(std::move(field)) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string family = "euclidean";
  std::vector<double> params;

  std::string domain = "annulus";  // annulus | torus
  double r_in = 1.0, r_out = 128.0, period = 1.0;
  int radial_nodes = 8, angular_nodes = 16, torus_nodes = 16;

  std::vector<double> radii;  // explicit list; empty means dyadic
  double radii_r0 = 4.0;
  int radii_count = 6;

  std::map<std::string, bool> stages = {{"compactify", true}, {"yamabe_normalize", true}, {"harmonic", true},
                                        {"normal", true},     {"decompactify", true},     {"fit", true},
                                        {"charges", true}};
  std::map<std::string, double> tolerances = {{"compactify", 1e-6}, {"harmonic", 1e-10}, {"normal", 1e-6},
                                              {"yamabe", 1e-8},     {"charges", 5e-2}};

  std::string output_dir = "out";
  std::vector<std::string> formats = {"json", "csv"};

  std::vector<double> effective_radii() const;
  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

// Command-line overrides.
void apply_radii_flag(RunConfig& c, const std::string& spec);   // r0:count
void apply_stage_flag(RunConfig& c, const std::string& spec);   // +name / -name
void apply_tol_flag(RunConfig& c, const std::string& spec);     // stage=value
void apply_format_flag(RunConfig& c, const std::string& spec);  // json,csv

struct ChargeRow {
  double radius, energy;
  double cx, cy, cz;
  double gap;
};

struct DecayRow {
  double log_r, log_sup;
  std::string component;
};

struct RunReport {
  std::string command;
  bool ok = false;
  nlohmann::json doc;
  std::vector<ChargeRow> charges;
  std::vector<DecayRow> decay;
};

// command: analyze | charges | compactify | expand | yamabe
RunReport run(const RunConfig& config, const std::string& command);
void emit_outputs(const RunReport& report, const RunConfig& config);

inline constexpr const char* charges_header = "radius,E_partial,Cx,Cy,Cz,gap";
inline constexpr const char* decay_header = "log_r,log_sup,component";

struct SelftestCase {
  std::string name;
  bool pass;
  std::string detail;
};
std::vector<SelftestCase> selftest();

const char* version();

}  // namespace aegeo
