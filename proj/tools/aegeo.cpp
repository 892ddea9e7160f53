#include "CLI11.hpp"
#include "aegeo/cli.hpp"

#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Asymptotically Euclidean metrics: curvature, compactification, expansions and charges"};
  app.set_version_flag("--version", aegeo::version());
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out_dir, radii, format;
  std::vector<std::string> stage_flags, tol_flags;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--radii", radii, "dyadic radii as r0:count");
  app.add_option("--stage", stage_flags, "enable or disable a stage: +name or -name")->allow_extra_args(false);
  app.add_option("--tol", tol_flags, "stage tolerance: stage=value")->allow_extra_args(false);
  app.add_option("--format", format, "comma separated output formats (json,csv)");

  app.add_subcommand("analyze", "decay fits of metric, scalar curvature and Cotton; Cotton admissibility");
  app.add_subcommand("charges", "ADM energy and centre of mass with convergence diagnostics");
  app.add_subcommand("compactify", "conformal compactification around the point at infinity");
  app.add_subcommand("expand", "full pipeline: coordinates, conformal factor fit, mass and charges");
  app.add_subcommand("yamabe", "first eigenvalue of the conformal Laplacian on a torus");
  app.add_subcommand("selftest", "run the built-in sanity cases");

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  if (command == "selftest") {
    int failed = 0;
    for (const auto& c : aegeo::selftest()) {
      std::printf("%s  %s%s%s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : "  ",
                  c.detail.c_str());
      failed += !c.pass;
    }
    return failed ? 3 : 0;
  }

  aegeo::RunConfig config;
  try {
    if (!config_path.empty()) config = aegeo::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!radii.empty()) aegeo::apply_radii_flag(config, radii);
    for (const auto& s : stage_flags) aegeo::apply_stage_flag(config, s);
    for (const auto& t : tol_flags) aegeo::apply_tol_flag(config, t);
    if (!format.empty()) aegeo::apply_format_flag(config, format);
    config.validate();
  } catch (const aegeo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  aegeo::RunReport report;
  try {
    report = aegeo::run(config, command);
  } catch (const aegeo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    aegeo::emit_outputs(report, config);
  } catch (const aegeo::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  }
  std::cout << report.doc["status"].get<std::string>() << "  " << config.output_dir << "\n";
  for (const auto& s : report.doc["stages"])
    if (s["status"] != "ok")
      std::cerr << s["name"].get<std::string>() << ": " << s["status"].get<std::string>() << "  "
                << s["message"].get<std::string>() << "\n";
  return report.ok ? 0 : 3;
}
