#include "nestfield/physics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nestfield {

PhysicsScheme physics_scheme_from_string(std::string_view name) {
  if (name == "condensation") return PhysicsScheme::condensation;
  if (name == "identity") return PhysicsScheme::identity;
  throw std::invalid_argument("unknown physics scheme '" + std::string(name) + "'");
}

std::string_view to_string(PhysicsScheme s) {
  return s == PhysicsScheme::condensation ? "condensation" : "identity";
}

double PhysicsParams::saturation(double theta, double z) const {
  return q0 * std::exp(-z / scale_height) * std::max(0.05, 1.0 + gamma * (theta - theta_ref));
}

void PhysicsParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || !(v > 0.0))
      throw std::invalid_argument(std::string("physics parameter ") + name + " must be positive");
  };
  positive(latent_heat, "latent_heat");
  positive(heat_capacity, "heat_capacity");
  positive(q0, "q0");
  positive(scale_height, "scale_height");
  positive(theta_ref, "theta_ref");
  if (!std::isfinite(gamma) || gamma < 0.0)
    throw std::invalid_argument("physics parameter gamma must be finite and non-negative");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("physics parameter fraction must lie in (0, 1]");
}

Eigen::VectorXd level_heights(const ExtrudedMesh& mesh) {
  const HorizontalMesh& h = mesh.horizontal();
  Eigen::VectorXd z(mesh.level_count());
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k <= mesh.layers(); ++k)
        z[mesh.level_dof(h.column(i, j), k)] =
            0.25 * (mesh.vertex_z(i, j, k) + mesh.vertex_z(i + 1, j, k) + mesh.vertex_z(i, j + 1, k) +
                    mesh.vertex_z(i + 1, j + 1, k));
  return z;
}

namespace {

void require_state(const MoistState& x, const char* where) {
  require_layout(x.theta, Space::Vtheta, where);
  require_same_layout(x.theta, x.vapour, where);
  require_same_layout(x.theta, x.cloud, where);
}

PhysicsIncrement zero_increment(const MoistState& x) {
  const Field z = Field::zero(Space::Vtheta, x.theta.mesh_handle());
  return {z, z, z};
}

}  // namespace

PhysicsIncrement toy_condensation(const MoistState& x, const PhysicsParams& p) {
  require_state(x, "toy_condensation");
  // Blending leaves round-off sized negatives; anything larger is an error.
  if ((x.vapour.values().array() < -1e-13).any() || (x.cloud.values().array() < -1e-13).any())
    throw std::domain_error("toy_condensation: negative moisture on input");
  const Eigen::VectorXd z = level_heights(x.theta.mesh());
  PhysicsIncrement inc = zero_increment(x);
  const double heating = p.latent_heat / p.heat_capacity;
  for (Eigen::Index d = 0; d < z.size(); ++d) {
    const double sat = p.saturation(x.theta[d], z[d]);
    const double mv = x.vapour[d];
    double delta = 0.0;  // condensed mass, negative for evaporation
    if (mv > sat)
      delta = p.fraction * (mv - sat);
    else if (x.cloud[d] > 0.0)
      delta = -std::min(p.fraction * (sat - std::max(mv, 0.0)), x.cloud[d]);
    inc.vapour[d] = -delta;
    inc.cloud[d] = delta;
    inc.theta[d] = heating * delta;
  }
  return inc;
}

PhysicsIncrement physics_increment(const MoistState& x, const PhysicsParams& params) {
  if (params.scheme == PhysicsScheme::identity) {
    require_state(x, "physics_increment");
    return zero_increment(x);
  }
  return toy_condensation(x, params);
}

bool CouplingRecorder::fields_before_increments() const {
  bool seen_increment = false;
  for (const MappingEvent& e : events_) {
    if (e.payload == Payload::field) {
      if (seen_increment || e.direction != MapDirection::to_physics) return false;
    } else {
      seen_increment = true;
      if (e.direction != MapDirection::to_dynamics) return false;
    }
  }
  return true;
}

namespace {

void note(CouplingRecorder* r, MapDirection d, Payload p, const char* var) {
  if (r) r->record(d, p, var);
}

// Extrapolated boundary levels can dip below zero; interior levels cannot.
Field finish_moisture(Field m, CouplingStats* stats, const char* what) {
  const ExtrudedMesh& mesh = m.mesh();
  const int nk = mesh.layers();
  long clipped = 0;
  for (int c = 0; c < mesh.columns(); ++c)
    for (int k = 0; k <= nk; ++k) {
      double& v = m[mesh.level_dof(c, k)];
      if (v >= 0.0) continue;
      if (k != 0 && k != nk && v < -1e-13)
        throw std::logic_error(std::string(what) + ": negative interior moisture after update");
      v = 0.0;
      ++clipped;
    }
  if (stats) stats->clipped_after_update += clipped;
  return m;
}

}  // namespace

MoistState apply_physics_fine(const Remapper& remap, const MoistState& x, const Field& rho_dry,
                              const PhysicsParams& params, CouplingRecorder* recorder,
                              CouplingStats* stats) {
  require_state(x, "apply_physics_fine");
  require_mesh(x.theta, remap.coarse(), "apply_physics_fine");
  const MoistureRemapper moist(remap, DryDensityContext::from_coarse(remap, rho_dry));
  RemapStats* rs = stats ? &stats->remap : nullptr;

  note(recorder, MapDirection::to_physics, Payload::field, "theta");
  note(recorder, MapDirection::to_physics, Payload::field, "vapour");
  note(recorder, MapDirection::to_physics, Payload::field, "cloud");
  const Field species[] = {x.vapour, x.cloud};
  std::vector<Field> fine_m = moist.prolong_mixing_ratios(species, rs);
  const MoistState fine{remap.prolong_scalar(x.theta), fine_m[0], fine_m[1]};

  const PhysicsIncrement inc = physics_increment(fine, params);

  note(recorder, MapDirection::to_dynamics, Payload::increment, "theta");
  note(recorder, MapDirection::to_dynamics, Payload::increment, "vapour");
  note(recorder, MapDirection::to_dynamics, Payload::increment, "cloud");
  MoistState out{x.theta + remap.restrict_scalar(inc.theta),
                 x.vapour + moist.restrict_mixing_ratio(inc.vapour, Clip::none),
                 x.cloud + moist.restrict_mixing_ratio(inc.cloud, Clip::none)};
  out.vapour = finish_moisture(std::move(out.vapour), stats, "apply_physics_fine");
  out.cloud = finish_moisture(std::move(out.cloud), stats, "apply_physics_fine");
  return out;
}

MoistState apply_physics_coarse(const Remapper& remap, const MoistState& x, const Field& rho_dry,
                                const PhysicsParams& params, CouplingRecorder* recorder,
                                CouplingStats* stats) {
  require_state(x, "apply_physics_coarse");
  require_mesh(x.theta, remap.fine(), "apply_physics_coarse");
  const MoistureRemapper moist(remap, DryDensityContext::from_fine(remap, rho_dry));
  RemapStats* rs = stats ? &stats->remap : nullptr;

  note(recorder, MapDirection::to_physics, Payload::field, "theta");
  note(recorder, MapDirection::to_physics, Payload::field, "vapour");
  note(recorder, MapDirection::to_physics, Payload::field, "cloud");
  const MoistState coarse{remap.restrict_scalar(x.theta),
                          moist.restrict_mixing_ratio(x.vapour, Clip::at_zero, rs),
                          moist.restrict_mixing_ratio(x.cloud, Clip::at_zero, rs)};

  const PhysicsIncrement inc = physics_increment(coarse, params);

  note(recorder, MapDirection::to_dynamics, Payload::increment, "theta");
  note(recorder, MapDirection::to_dynamics, Payload::increment, "vapour");
  note(recorder, MapDirection::to_dynamics, Payload::increment, "cloud");
  const Field dagger[] = {x.vapour + moist.prolong_unlimited(inc.vapour),
                          x.cloud + moist.prolong_unlimited(inc.cloud)};
  const Field safe[] = {moist.identify_mixing_ratio(coarse.vapour + inc.vapour, Clip::at_zero, rs),
                        moist.identify_mixing_ratio(coarse.cloud + inc.cloud, Clip::at_zero, rs)};
  const PositivityFactor factors[] = {compute_lambda(remap.pair(), dagger[0], safe[0]),
                                      compute_lambda(remap.pair(), dagger[1], safe[1])};
  const PositivityFactor lambda = couple_boundary_levels(max_lambda(factors));
  if (rs) rs->limited_cells += (lambda.lambda.values().array() > 0.0).count();

  return {x.theta + remap.prolong_scalar(inc.theta),
          blend(remap.pair(), dagger[0], safe[0], lambda),
          blend(remap.pair(), dagger[1], safe[1], lambda)};
}

}  // namespace nestfield
