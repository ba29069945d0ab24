#include "support.hpp"

#include "nestfield/physics.hpp"

#include <catch_amalgamated.hpp>

using namespace nftest;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MoistState uniform_state(const MeshHandle& m, double theta, double vapour, double cloud) {
  return {Field::constant(Space::Vtheta, m, theta), Field::constant(Space::Vtheta, m, vapour),
          Field::constant(Space::Vtheta, m, cloud)};
}

// Physics state on one mesh: saturated blob in a subsaturated background,
// with a little cloud above it.
MoistState blob_state(const MeshHandle& m, const PhysicsParams& pp) {
  MoistState x{physics_theta(m), Field::zero(Space::Vtheta, m), Field::zero(Space::Vtheta, m)};
  const Eigen::VectorXd z = level_heights(*m);
  const HorizontalMesh& h = m->horizontal();
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k <= m->layers(); ++k) {
        const Eigen::Index d = m->level_dof(h.column(i, j), k);
        const double dx = periodic_offset(h.centre_x(i), 0.5 * h.Lx, h.Lx);
        const double dy = periodic_offset(h.centre_y(j), 0.5 * h.Ly, h.Ly);
        const double g = std::exp(-(dx * dx + dy * dy) / std::pow(0.2 * h.Lx, 2));
        const double sat = pp.saturation(x.theta[d], z[d]);
        x.vapour[d] = sat * (0.7 + 0.6 * g);
        x.cloud[d] = k > 2 ? 1e-4 * g : 0.0;
      }
  return x;
}

}  // namespace

TEST_CASE("saturation formula") {
  PhysicsParams p;
  CHECK_THAT(p.saturation(300.0, 0.0), WithinRel(0.015, 1e-15));
  CHECK_THAT(p.saturation(310.0, 2500.0), WithinRel(0.015 * std::exp(-1.0) * 1.6, 1e-14));
  // Floor on the temperature factor.
  CHECK_THAT(p.saturation(250.0, 0.0), WithinRel(0.015 * 0.05, 1e-14));
  p.fraction = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.fraction = 0.5;
  p.latent_heat = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("condensation of supersaturated vapour") {
  const NestedMeshPair pair = make_pair(4, 4, 2, 2, 0.0, 3000.0);
  PhysicsParams p;
  p.fraction = 1.0;
  const Eigen::VectorXd z = level_heights(*pair.coarse);
  MoistState x = uniform_state(pair.coarse, 300.0, 0.0, 0.0);
  for (Eigen::Index d = 0; d < z.size(); ++d) x.vapour[d] = p.saturation(300.0, z[d]) + 0.002;
  const PhysicsIncrement inc = toy_condensation(x, p);
  for (Eigen::Index d = 0; d < z.size(); ++d) {
    CHECK_THAT(inc.vapour[d], WithinAbs(-0.002, 1e-15));
    CHECK_THAT(inc.cloud[d], WithinAbs(0.002, 1e-15));
    CHECK_THAT(inc.theta[d], WithinRel(0.002 * 2.5e6 / 1004.5, 1e-11));
  }
}

TEST_CASE("evaporation is limited by the cloud present") {
  const NestedMeshPair pair = make_pair(4, 4, 2, 2);
  PhysicsParams p;
  const MoistState x = uniform_state(pair.coarse, 300.0, 0.0, 1e-4);
  const PhysicsIncrement inc = toy_condensation(x, p);
  const Eigen::VectorXd z = level_heights(*pair.coarse);
  for (Eigen::Index d = 0; d < z.size(); ++d) {
    const double want = std::min(0.5 * p.saturation(300.0, z[d]), 1e-4);
    CHECK_THAT(inc.cloud[d], WithinAbs(-want, 1e-18));
    CHECK_THAT(inc.vapour[d], WithinAbs(want, 1e-18));
    CHECK(x.cloud[d] + inc.cloud[d] >= 0.0);
  }
}

TEST_CASE("saturated air without cloud is at equilibrium") {
  const NestedMeshPair pair = make_pair(4, 4, 2, 3, 1000.0);
  PhysicsParams p;
  MoistState x = uniform_state(pair.fine, 0.0, 0.0, 0.0);
  x.theta = physics_theta(pair.fine);
  const Eigen::VectorXd z = level_heights(*pair.fine);
  for (Eigen::Index d = 0; d < z.size(); ++d) x.vapour[d] = p.saturation(x.theta[d], z[d]);
  const PhysicsIncrement inc = toy_condensation(x, p);
  CHECK(max_abs(inc.theta.values()) == 0.0);
  CHECK(max_abs(inc.vapour.values()) == 0.0);
  x.vapour[3] = -1e-6;
  CHECK_THROWS_AS(toy_condensation(x, p), std::domain_error);
  p.scheme = PhysicsScheme::identity;
  CHECK(max_abs(physics_increment(x, p).cloud.values()) == 0.0);
}

TEST_CASE("level heights average the corner vertices") {
  const NestedMeshPair pair = make_pair(8, 8, 2, 2, 2000.0);
  const ExtrudedMesh& m = *pair.fine;
  const Eigen::VectorXd z = level_heights(m);
  const int c = m.horizontal().column(3, 4);
  CHECK_THAT(z[m.level_dof(c, 1)], WithinRel(0.25 * (m.vertex_z(3, 4, 1) + m.vertex_z(4, 4, 1) +
                                                      m.vertex_z(3, 5, 1) + m.vertex_z(4, 5, 1)), 1e-15));
}

TEST_CASE("identity physics leaves the state unchanged on either mesh") {
  const NestedMeshPair pair = make_pair(16, 16, 2, 4, 1500.0);
  const Remapper r(pair);
  PhysicsParams p;
  p.scheme = PhysicsScheme::identity;
  const MoistState xc = blob_state(pair.coarse, PhysicsParams{});
  const MoistState outc = apply_physics_fine(r, xc, physics_density(pair.coarse), p);
  CHECK(max_diff(outc.theta, xc.theta) == 0.0);
  CHECK(max_diff(outc.vapour, xc.vapour) == 0.0);
  const MoistState xf = blob_state(pair.fine, PhysicsParams{});
  const MoistState outf = apply_physics_coarse(r, xf, physics_density(pair.fine), p);
  CHECK(max_diff(outf.theta, xf.theta) == 0.0);
  CHECK(max_diff(outf.vapour, xf.vapour) <= 1e-18);
}

TEST_CASE("coupling conserves total moisture per column") {
  const NestedMeshPair pair = make_pair(16, 16, 2, 4, 1500.0);
  const Remapper r(pair);
  const PhysicsParams p;
  SECTION("physics on the fine mesh") {
    const MoistState x = blob_state(pair.coarse, p);
    const Field rho = physics_density(pair.coarse);
    CouplingStats stats;
    const MoistState y = apply_physics_fine(r, x, rho, p, nullptr, &stats);
    const Eigen::VectorXd before = column_moist_mass(x.vapour + x.cloud, rho);
    const Eigen::VectorXd after = column_moist_mass(y.vapour + y.cloud, rho);
    CHECK(rel_diff(after, before) <= 1e-12);
    CHECK(max_abs(y.theta.values() - x.theta.values()) > 0.0);
    CHECK(y.vapour.values().minCoeff() >= 0.0);
    CHECK(y.cloud.values().minCoeff() >= 0.0);
  }
  SECTION("physics on the coarse mesh") {
    const MoistState x = blob_state(pair.fine, p);
    const Field rho = physics_density(pair.fine);
    CouplingStats stats;
    const MoistState y = apply_physics_coarse(r, x, rho, p, nullptr, &stats);
    // Moisture moves between the fine columns of a coarse column.
    const Eigen::VectorXd before = sum_to_coarse(pair, column_moist_mass(x.vapour + x.cloud, rho), 1);
    const Eigen::VectorXd after = sum_to_coarse(pair, column_moist_mass(y.vapour + y.cloud, rho), 1);
    if (stats.remap.clipped_extrapolations == 0) CHECK(rel_diff(after, before) <= 1e-12);
    CHECK(y.vapour.values().minCoeff() >= -1e-13);
    CHECK(y.cloud.values().minCoeff() >= -1e-13);
  }
}

TEST_CASE("coarse physics keeps fine moisture non-negative for adversarial inputs") {
  const NestedMeshPair pair = make_pair(16, 16, 2, 4, 1500.0);
  const Remapper r(pair);
  const PhysicsParams p;
  Rng rng(61);
  for (int t = 0; t < 10; ++t) {
    MoistState x{physics_theta(pair.fine), adversarial_moisture(pair.fine, rng, t),
                 adversarial_moisture(pair.fine, rng, t + 2)};
    x.cloud = 0.1 * x.cloud;
    const MoistState y = apply_physics_coarse(r, x, random_density(pair.fine, rng), p);
    CHECK(y.vapour.values().minCoeff() >= -1e-13);
    CHECK(y.cloud.values().minCoeff() >= -1e-13);
  }
}

TEST_CASE("fields go to physics before increments come back") {
  const NestedMeshPair pair = make_pair(8, 8, 2, 4);
  const Remapper r(pair);
  const PhysicsParams p;
  CouplingRecorder rec;
  apply_physics_fine(r, blob_state(pair.coarse, p), physics_density(pair.coarse), p, &rec);
  CHECK(rec.events().size() == 6);
  CHECK(rec.fields_before_increments());
  rec.clear();
  apply_physics_coarse(r, blob_state(pair.fine, p), physics_density(pair.fine), p, &rec);
  CHECK(rec.events().size() == 6);
  CHECK(rec.fields_before_increments());
  rec.record(MapDirection::to_physics, Payload::field, "theta");
  CHECK_FALSE(rec.fields_before_increments());
  CouplingRecorder wrong;
  wrong.record(MapDirection::to_dynamics, Payload::field, "theta");
  CHECK_FALSE(wrong.fields_before_increments());
}

TEST_CASE("coupling rejects states on the wrong mesh") {
  const NestedMeshPair pair = make_pair(8, 8, 2, 4);
  const Remapper r(pair);
  const PhysicsParams p;
  CHECK_THROWS_AS(apply_physics_fine(r, blob_state(pair.fine, p), physics_density(pair.coarse), p), LayoutError);
  CHECK_THROWS_AS(apply_physics_coarse(r, blob_state(pair.coarse, p), physics_density(pair.fine), p), LayoutError);
}
