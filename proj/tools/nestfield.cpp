// nestfield <experiment> --config <path> [--out <dir>] [--seed N] [--advective]
//           [--physics-placement fine|coarse] [--set key=value]...
//
// Exit codes: 0 success, 1 property failure, 2 configuration error.

#include "nestfield/config.hpp"
#include "nestfield/experiments.hpp"
#include "nestfield/properties.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace nestfield;

namespace {

void write_csv(const std::string& dir, const std::string& name, const Diagnostics& d) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / (name + ".csv");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  d.write_csv(os);
  std::cout << "wrote " << path.string() << " (" << d.rows.size() << " rows)\n";
}

int run(const ExperimentConfig& cfg) {
  const std::string name(to_string(cfg.experiment));
  switch (cfg.experiment) {
    case Experiment::transport:
    case Experiment::transport_advective: {
      const Diagnostics d = run_transport(cfg, cfg.output_dir);
      write_csv(cfg.output_dir, name, d);
      const auto drift = d.column("tracer_drift_0");
      double worst = 0;
      for (double v : drift) worst = std::max(worst, std::abs(v));
      std::cout << "max relative tracer mass drift " << worst << "\n";
      if (cfg.advective()) std::cout << "final advective drift " << d.column("adv_drift_0").back() << "\n";
      return 0;
    }
    case Experiment::physics_fine:
    case Experiment::physics_coarse: {
      const Diagnostics d = run_physics_demo(cfg, cfg.output_dir);
      write_csv(cfg.output_dir, name, d);
      std::cout << "final moist mass drift " << d.column("moist_drift").back() << ", limited cells "
                << d.column("limited_cells").back() << "\n";
      return 0;
    }
    case Experiment::properties: {
      const PropertyReport report = run_properties(cfg);
      report.write(std::cout);
      Diagnostics d;
      d.columns = {"index", "value", "tolerance", "passed"};
      for (std::size_t i = 0; i < report.results.size(); ++i) {
        const auto& r = report.results[i];
        d.add_row({double(i), r.value, r.tolerance, r.passed() ? 1.0 : 0.0});
      }
      write_csv(cfg.output_dir, name, d);
      return report.all_passed() ? 0 : 1;
    }
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested-mesh remapping, transport and physics coupling experiments"};
  std::string experiment, config_path, out, placement;
  std::uint64_t seed = 0;
  bool advective = false, print_config = false;
  std::vector<std::string> overrides;
  app.add_option("experiment", experiment,
                 "transport | transport-advective | physics-fine | physics-coarse | properties")
      ->required();
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
  app.add_flag("--advective", advective, "also run the advective-form baseline");
  app.add_option("--physics-placement", placement, "fine | coarse")
      ->check(CLI::IsMember({"fine", "coarse"}));
  app.add_option("--set", overrides, "override a config key, key=value");
  app.add_flag("--print-config", print_config, "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) read_config_file(config_path, cfg);
    cfg.experiment = experiment_from_string(experiment);
    if (advective) {
      if (cfg.experiment != Experiment::transport && cfg.experiment != Experiment::transport_advective)
        throw ConfigError("--advective applies to transport experiments only");
      cfg.experiment = Experiment::transport_advective;
    }
    if (!placement.empty()) {
      if (!cfg.physics()) throw ConfigError("--physics-placement applies to physics experiments only");
      cfg.experiment = placement == "fine" ? Experiment::physics_fine : Experiment::physics_coarse;
    }
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      set_option(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!out.empty()) cfg.output_dir = out;
    if (*seed_opt) cfg.seed = seed;
    cfg.finalize();
    if (print_config) write_config(std::cout, cfg);
    return run(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CflError& e) {
    std::cerr << "CFL violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
