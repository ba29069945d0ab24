#pragma once

#include "nestfield/physics.hpp"
#include "nestfield/transport.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

namespace nestfield {

/// Invalid or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { transport, transport_advective, physics_fine, physics_coarse, properties };

Experiment experiment_from_string(std::string_view name);
std::string_view to_string(Experiment e);

/// Every key of the flat key=value file has a member of the same name.
/// Mesh sizes of 0 select the experiment's default.
struct ExperimentConfig {
  Experiment experiment = Experiment::transport;
  int nx = 0;
  int ny = 0;
  int refinement = 2;
  int layers = 0;              // Nk
  double dt = 4.0;             // s
  double tau = 2000.0;         // s, total run time
  FluxScheme flux_scheme = FluxScheme::upwind1;
  int substeps = 1;
  std::string output_dir = ".";
  std::uint64_t seed = 1;

  double Lx = 0.0;             // m, 0 means 1 km per fine cell
  double Ly = 0.0;
  double z_top = 10000.0;      // m
  std::string orography = "flat";  // flat | bump
  double bump_height = 1500.0;     // m

  std::string wind = "deformational";  // deformational | zero
  double courant = 0.5;                // peak Courant number of the prescribed flow
  std::string tracer = "hills";        // hills | constant (first species)
  double tracer_value = 0.5;           // the second species is this constant

  PhysicsScheme physics_scheme = PhysicsScheme::condensation;
  std::string moisture_profile = "blob";  // blob | holes
  double fraction = 0.5;

  int trials = 20;                      // randomised inputs per property
  bool corrupt_density_weights = false;  // test hook: breaks A_rho conservation

  bool advective() const { return experiment == Experiment::transport_advective; }
  bool physics() const {
    return experiment == Experiment::physics_fine || experiment == Experiment::physics_coarse;
  }
  int steps() const;
  /// Fills experiment defaults and checks every invariant; throws ConfigError.
  void finalize();
  PhysicsParams physics_params() const;
};

/// Applies one key=value pair; throws ConfigError on unknown keys or bad values.
void set_option(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads "key = value" lines; '#' starts a comment, blank lines are ignored.
void read_config(std::istream& is, ExperimentConfig& cfg);
void read_config_file(const std::string& path, ExperimentConfig& cfg);

/// The resolved configuration as key=value lines.
void write_config(std::ostream& os, const ExperimentConfig& cfg);

}  // namespace nestfield
