#pragma once

#include "nestfield/fields.hpp"
#include "nestfield/remap.hpp"

#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace nestfield {

enum class FluxScheme {
  upwind1,        // upstream cell value
  linear_upwind2  // upstream cell value plus a centred-slope linear correction
};

FluxScheme flux_scheme_from_string(std::string_view name);
std::string_view to_string(FluxScheme s);

struct FluxOperatorConfig {
  FluxScheme scheme = FluxScheme::upwind1;
  int substeps = 1;  // SSP-RK2 substeps per time step for the dry density
};

/// Raised when a step would exceed the Courant limit of its substepping.
class CflError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cell divergence from face fluxes: div * V = sum over faces of +/- F A.
Field divergence(const Field& flux);

/// Tracer flux F[a, F_d]: the face value of `a` upstream of F_d, times F_d.
/// A constant `a = C` gives exactly C * F_d. Vertical faces use first-order
/// upwinding for both schemes.
Field flux_operator(const Field& mixing_ratio, const Field& mass_flux, FluxScheme scheme);

/// Horizontal velocity u(x, y, t), v(x, y, t) in m/s; no vertical motion.
struct PrescribedWind {
  std::function<double(double x, double y, double t)> u;
  std::function<double(double x, double y, double t)> v;
};

/// Normal velocity at the face centres of a mesh.
Field sample_wind(const MeshHandle& mesh, const PrescribedWind& wind, double t);

/// Largest |u| dt / spacing over the lateral faces.
double courant_number(const Field& wind, double dt);

struct TransportState {
  Field rho_dry;                      // fine Vrho, kg m^-3
  Field mass_flux;                    // fine Vu, time-mean dry mass flux of the last step
  Field mean_wind;                    // fine Vu, time-mean velocity of the last step
  std::vector<Field> mixing_ratio;    // coarse Vrho, kg/kg
  std::vector<Field> tracer_density;  // coarse Vrho, mixing_ratio * A_rho[rho_dry]
  double t = 0.0;
  double dt = 0.0;
};

TransportState make_transport_state(const Remapper& remap, Field rho_dry,
                                    std::vector<Field> mixing_ratio, double dt);

/// rho^{n+1} = rho^n - dt div F_d, where F_d is the time-mean flux of the
/// SSP-RK2 substeps. Stores F_d and the mean wind in the state and advances t.
void step_dry_density(TransportState& state, const PrescribedWind& wind,
                      const FluxOperatorConfig& cfg);

/// Flux-form coarse tracer step driven by A_u of the stored fine mass flux;
/// call after step_dry_density. Two-stage, both stages using the same flux.
void step_coarse_tracer(TransportState& state, const Remapper& remap, FluxScheme scheme);

/// Advective-form comparison step driven by A_u of the mean fine wind; not
/// mass conserving. Call after step_dry_density.
void step_coarse_tracer_advective(TransportState& state, const Remapper& remap, FluxScheme scheme);

/// The vertically-shifted twin of a mesh as an extruded mesh of its own, with
/// Nk+1 layers. Vrho on the twin has the DoF order of VrhoShifted on `mesh`.
MeshHandle shifted_twin(const ExtrudedMesh& mesh);

/// Fluxes through the faces of the twin: each twin face carries half of the
/// flux through the two primary faces it straddles, so that the divergence on
/// the twin equals Q applied to the primary divergence.
Field shift_flux(const Field& flux, const MeshHandle& twin);

/// Tracers carried as densities on the shifted coarse mesh, e.g. moisture
/// species held in Vtheta; dry density is Q[A_rho[rho_dry]].
struct ShiftedTracerState {
  MeshHandle twin;                    // shifted twin of the coarse mesh
  std::vector<Field> mixing_ratio;    // Vrho on twin
  std::vector<Field> tracer_density;  // Vrho on twin
};

/// Starts from Vtheta mixing ratios on the coarse mesh, shifted with M.
ShiftedTracerState make_shifted_tracer_state(const Remapper& remap, const Field& rho_dry,
                                             const std::vector<Field>& mixing_ratio);

/// Flux-form step on the twin driven by the restricted dry flux of `dry`;
/// call after step_dry_density.
void step_shifted_tracer(ShiftedTracerState& state, const TransportState& dry, const Remapper& remap,
                         FluxScheme scheme);

}  // namespace nestfield
