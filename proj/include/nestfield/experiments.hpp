#pragma once

#include "nestfield/config.hpp"
#include "nestfield/physics.hpp"
#include "nestfield/remap.hpp"
#include "nestfield/transport.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace nestfield {

/// Per-step scalar series; one row per step, first column is the step index.
struct Diagnostics {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
  std::vector<double> column(std::string_view name) const;
  /// Header row then one line per step, values at full precision.
  void write_csv(std::ostream& os) const;
  std::string csv() const;
};

// Setup shared by the experiments, the property suite and the tests.

/// cos^2 bump of height `height` and radius Lx/4 centred in the domain.
Orography bump_orography(const HorizontalMesh& fine, double height);
NestedMeshPair build_pair(const ExperimentConfig& cfg);

/// u = U0 sin^2(pi x/Lx) sin(2 pi y/Ly) cos(pi t/tau), v = -U0 sin^2(pi y/Ly) sin(2 pi x/Lx) cos(pi t/tau)
PrescribedWind deformational_wind(double Lx, double Ly, double U0, double tau);

/// Shortest signed separation on a periodic interval of length L.
double periodic_offset(double a, double b, double L);

/// rho0 + (rho_t - rho0) sin^2(pi y / Ly) with rho0 = 0.5, rho_t = 1.0.
Field transport_density(const MeshHandle& mesh);
/// 0.5 + two Gaussian hills of amplitude 1 at (Lx/2 -+ Lx/8, Ly/2), radius Lx/8.
Field gaussian_hills(const MeshHandle& mesh);

/// Heights of cell centroids: mean of the eight vertex heights.
Eigen::VectorXd cell_heights(const ExtrudedMesh& mesh);

/// Hydrostatic-like dry density with a weak horizontal modulation.
Field physics_density(const MeshHandle& mesh);
/// Stable profile theta = 300 + 0.004 z.
Field physics_theta(const MeshHandle& mesh);

/// Transport comparison; writes <experiment>_<t>.txt dumps when output_dir is non-empty.
Diagnostics run_transport(const ExperimentConfig& cfg, const std::string& output_dir);
/// Physics-only stepping with the placement given by the experiment.
Diagnostics run_physics_demo(const ExperimentConfig& cfg, const std::string& output_dir);

/// "<experiment>_<t>.txt" with t in seconds.
std::string dump_name(std::string_view experiment, double t);

}  // namespace nestfield
