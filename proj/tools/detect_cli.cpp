// Scenario-driven entry point: run a monitoring scenario in virtual or
// wall-clock mode, validate a scenario file, or re-export a trust report.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "detect/detect.hpp"

namespace {

int run_command(const std::string& scenario_path, const std::string& mode,
                const std::string& out_dir, std::optional<std::uint64_t> seed,
                int base_port) {
  detect::ScenarioConfig cfg;
  try {
    cfg = detect::load_scenario(scenario_path, seed);
  } catch (const detect::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& w : detect::scenario_warnings(cfg))
    std::cerr << "warning: " << w << '\n';
  try {
    detect::RunResult result;
    if (mode == "virtual") {
      result = detect::run_scenario(cfg, out_dir);
    } else {
      detect::WallRunOptions opts;
      opts.base_port = base_port;
      result = detect::run_scenario_wall(cfg, out_dir, opts);
    }
    for (const auto& note : result.notes) std::cerr << "note: " << note << '\n';
    std::cout << "wrote " << result.report_files.size() << " trust reports and "
              << result.summary_file.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}

int validate_command(const std::string& scenario_path) {
  try {
    const auto cfg = detect::load_scenario(scenario_path);
    for (const auto& w : detect::scenario_warnings(cfg))
      std::cerr << "warning: " << w << '\n';
    std::cout << "ok: " << cfg.services.size() << " services, "
              << cfg.sweep.size() << " sweep points, duration "
              << detect::detail::format_double(cfg.duration) << "s\n";
    return 0;
  } catch (const detect::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
}

int export_command(const std::string& report_path, const std::string& format,
                   const std::string& out_path) {
  try {
    std::ifstream in(report_path);
    if (!in) {
      std::cerr << "runtime error: cannot open " << report_path << '\n';
      return 2;
    }
    nlohmann::json report;
    try {
      report = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "runtime error: " << e.what() << '\n';
      return 2;
    }
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "runtime error: cannot open " << out_path << '\n';
      return 2;
    }
    if (format == "csv")
      detect::export_report_csv(report, out);
    else
      out << report.dump(2) << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QoS-based trust monitor for black-box data services"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string mode = "virtual";
  std::string out_dir = "out";
  std::uint64_t seed_value = 0;
  int base_port = 0;

  auto* run = app.add_subcommand("run", "run a scenario and write trust reports");
  run->add_option("--scenario", scenario_path, "scenario file (JSON)")->required();
  run->add_option("--mode", mode, "virtual | wall")
      ->check(CLI::IsMember({"virtual", "wall"}));
  run->add_option("--out", out_dir, "output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed_value, "override scenario seed");
  run->add_option("--base-port", base_port,
                  "wall mode: first service port (0 = ephemeral)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--scenario", validate_path, "scenario file (JSON)")
      ->required();

  std::string report_path;
  std::string format = "json";
  std::string export_out;
  auto* exp = app.add_subcommand("export", "re-export a trust report");
  exp->add_option("--report", report_path, "trust report JSON file")->required();
  exp->add_option("--format", format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
  exp->add_option("--out", export_out, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    std::optional<std::uint64_t> seed;
    if (seed_opt->count() > 0) seed = seed_value;
    return run_command(scenario_path, mode, out_dir, seed, base_port);
  }
  if (validate->parsed()) return validate_command(validate_path);
  if (exp->parsed()) return export_command(report_path, format, export_out);
  return 1;
}
