#pragma once

#include "nestfield/fields.hpp"
#include "nestfield/moisture.hpp"
#include "nestfield/remap.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace nestfield {

enum class PhysicsScheme {
  condensation,  // toy evaporation-condensation with latent heating
  identity       // zero increment
};

PhysicsScheme physics_scheme_from_string(std::string_view name);
std::string_view to_string(PhysicsScheme s);

/// m_sat(theta, z) = q0 exp(-z / H) max(0.05, 1 + gamma (theta - theta_ref))
struct PhysicsParams {
  PhysicsScheme scheme = PhysicsScheme::condensation;
  double latent_heat = 2.5e6;     // J kg^-1
  double heat_capacity = 1004.5;  // J kg^-1 K^-1
  double q0 = 0.015;              // kg kg^-1
  double scale_height = 2500.0;   // m
  double theta_ref = 300.0;       // K
  double gamma = 0.06;            // K^-1
  double fraction = 0.5;          // relaxation per call, in (0, 1]

  double saturation(double theta, double z) const;
  /// Throws std::invalid_argument on non-finite or non-positive parameters.
  void validate() const;
};

/// Prognostics in Vtheta on one mesh: potential temperature, vapour and cloud.
struct MoistState {
  Field theta;
  Field vapour;
  Field cloud;
};

struct PhysicsIncrement {
  Field theta;
  Field vapour;
  Field cloud;
};

/// Height of each Vtheta level: mean of the four corner vertex heights.
Eigen::VectorXd level_heights(const ExtrudedMesh& mesh);

/// Phase change towards saturation; never drives vapour or cloud negative.
/// Throws std::domain_error on negative moisture.
PhysicsIncrement toy_condensation(const MoistState& x, const PhysicsParams& params);

/// Dispatches on params.scheme.
PhysicsIncrement physics_increment(const MoistState& x, const PhysicsParams& params);

enum class MapDirection { to_physics, to_dynamics };
enum class Payload { field, increment };

struct MappingEvent {
  MapDirection direction;
  Payload payload;
  std::string variable;
};

/// Records every mapping made by a coupling call, in order.
class CouplingRecorder {
 public:
  void record(MapDirection d, Payload p, std::string variable) {
    events_.push_back({d, p, std::move(variable)});
  }
  const std::vector<MappingEvent>& events() const { return events_; }
  void clear() { events_.clear(); }

  /// True when every field mapping precedes every increment mapping, fields
  /// only go to the physics mesh and increments only come back.
  bool fields_before_increments() const;

 private:
  std::vector<MappingEvent> events_;
};

struct CouplingStats {
  RemapStats remap;
  long clipped_after_update = 0;  // boundary levels raised to zero after the increment
};

/// Dynamics on the coarse mesh, physics on the fine mesh:
///   theta += A[dP(B theta)],  m += A_m[dP(B_m m)]
/// `rho_dry` is the coarse dry density.
MoistState apply_physics_fine(const Remapper& remap, const MoistState& x, const Field& rho_dry,
                              const PhysicsParams& params, CouplingRecorder* recorder = nullptr,
                              CouplingStats* stats = nullptr);

/// Dynamics on the fine mesh, physics on the coarse mesh:
///   theta += B[dP(A theta)],  m = Lambda[m + B_m^dagger[dP], I_m[A_m m + dP]]
/// `rho_dry` is the fine dry density.
MoistState apply_physics_coarse(const Remapper& remap, const MoistState& x, const Field& rho_dry,
                                const PhysicsParams& params, CouplingRecorder* recorder = nullptr,
                                CouplingStats* stats = nullptr);

}  // namespace nestfield
