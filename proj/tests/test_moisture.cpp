#include "support.hpp"

#include "nestfield/moisture.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace nftest;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NestedMeshPair unit_column_pair(int layers) {
  HorizontalMesh h{2, 2, 2.0, 2.0, 0};
  return build_nested_pair(h, VerticalGrid::uniform(layers, double(layers)), 2, Orography::flat(h));
}

// Smooth positive Vtheta field on any mesh.
Field smooth_moisture(const MeshHandle& m, double amp = 0.3) {
  Field f = Field::zero(Space::Vtheta, m);
  const HorizontalMesh& h = m->horizontal();
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k <= m->layers(); ++k)
        f[m->level_dof(h.column(i, j), k)] =
            0.01 * (1 + amp * std::sin(2 * M_PI * h.centre_x(i) / h.Lx) * std::cos(2 * M_PI * h.centre_y(j) / h.Ly)) *
            std::exp(-0.2 * k);
  return f;
}

}  // namespace

TEST_CASE("Q on a two-layer column") {
  const NestedMeshPair p = unit_column_pair(2);
  Field rho = Field::zero(Space::Vrho, p.fine);
  for (int c = 0; c < 4; ++c) {
    rho[p.fine->cell_dof(c, 0)] = 1.0;
    rho[p.fine->cell_dof(c, 1)] = 3.0;
  }
  const Field q = shift_density(rho);
  CHECK_THAT(q[0], WithinRel(1.0, 1e-15));
  CHECK_THAT(q[1], WithinRel(2.0, 1e-15));
  CHECK_THAT(q[2], WithinRel(3.0, 1e-15));
  CHECK_THAT(total_mass(q), WithinRel(total_mass(rho), 1e-15));
}

TEST_CASE("M and its inverse") {
  const NestedMeshPair p = unit_column_pair(3);
  Field m = Field::zero(Space::Vtheta, p.fine);
  for (int c = 0; c < 4; ++c)
    for (int k = 0; k < 4; ++k) m[p.fine->level_dof(c, k)] = k;
  const Field s = shift_mixing_ratio(m);
  CHECK(s.space() == Space::VrhoShifted);
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 1.0);
  CHECK(s[2] == 2.0);
  CHECK(s[3] == 2.5);
  CHECK(max_diff(unshift_mixing_ratio(s), m) <= 1e-15);

  Field t = Field::zero(Space::VrhoShifted, p.fine);
  for (int c = 0; c < 4; ++c) {
    t[p.fine->level_dof(c, 0)] = 0.1;
    t[p.fine->level_dof(c, 1)] = 0.5;
    t[p.fine->level_dof(c, 2)] = 0.5;
    t[p.fine->level_dof(c, 3)] = 0.5;
  }
  RemapStats stats;
  const Field clipped = unshift_mixing_ratio(t, Clip::at_zero, &stats);
  CHECK(clipped[0] == 0.0);
  CHECK(stats.clipped_extrapolations == 4);
  CHECK_THAT(unshift_mixing_ratio(t, Clip::none)[0], WithinAbs(-0.3, 1e-15));
  // Zero bottom layer under a moist one extrapolates to -1 and is clipped.
  Field front = Field::constant(Space::VrhoShifted, p.fine, 1.0);
  for (int c = 0; c < 4; ++c) front[p.fine->level_dof(c, 0)] = 0.0;
  CHECK(unshift_mixing_ratio(front, Clip::none)[0] == -1.0);
  CHECK(unshift_mixing_ratio(front)[0] == 0.0);
  const NestedMeshPair thin = unit_column_pair(1);
  CHECK_THROWS_AS(unshift_mixing_ratio(Field::zero(Space::VrhoShifted, thin.fine)), std::invalid_argument);
}

TEST_CASE("lambda examples") {
  const NestedMeshPair p = make_pair(4, 4, 2, 3);
  Field lo = Field::constant(Space::Vtheta, p.fine, 1.0);
  Field hi = Field::constant(Space::Vtheta, p.fine, 1.0);
  const int child = p.nesting.cells_of[0][1];
  lo[p.fine->level_dof(child, 2)] = -2.0;
  hi[p.fine->level_dof(child, 2)] = 3.0;
  const PositivityFactor l1 = compute_lambda(p, lo, hi);
  CHECK_THAT(l1.lambda[p.coarse->level_dof(0, 2)], WithinRel(0.4, 1e-15));
  CHECK(l1.lambda.values().sum() == Catch::Approx(0.4));
  // Blending zeroes the worst child.
  CHECK_THAT(blend(p, lo, hi, l1)[p.fine->level_dof(child, 2)], WithinAbs(0.0, 1e-15));

  lo[p.fine->level_dof(child, 2)] = -1.0;
  hi[p.fine->level_dof(child, 2)] = 1.0;
  CHECK_THAT(compute_lambda(p, lo, hi).lambda[p.coarse->level_dof(0, 2)], WithinRel(0.5, 1e-15));

  hi[0] = -1.0;
  CHECK_THROWS_AS(compute_lambda(p, lo, hi), std::domain_error);
  hi[0] = 1.0;
  hi[p.fine->level_dof(child, 2)] = -1.0;
  CHECK_THROWS_AS(compute_lambda(p, lo, hi), std::domain_error);
}

TEST_CASE("boundary level coupling and maxima") {
  const NestedMeshPair p = make_pair(4, 4, 2, 4);
  Field l = Field::zero(Space::Vtheta, p.coarse);
  l[p.coarse->level_dof(1, 0)] = 0.3;
  l[p.coarse->level_dof(1, 4)] = 0.2;
  l[p.coarse->level_dof(1, 2)] = 0.1;
  const PositivityFactor c = couple_boundary_levels(PositivityFactor(l));
  CHECK(c.lambda[p.coarse->level_dof(1, 1)] == 0.3);
  CHECK(c.lambda[p.coarse->level_dof(1, 3)] == 0.2);
  CHECK(c.lambda[p.coarse->level_dof(1, 2)] == 0.1);
  Field other = Field::constant(Space::Vtheta, p.coarse, 0.25);
  const std::vector<PositivityFactor> fs{PositivityFactor(l), PositivityFactor(other)};
  const PositivityFactor mx = max_lambda(fs);
  CHECK(mx.lambda[p.coarse->level_dof(1, 0)] == 0.3);
  CHECK(mx.lambda[p.coarse->level_dof(2, 0)] == 0.25);
  CHECK_THROWS_AS(max_lambda(std::span<const PositivityFactor>()), std::invalid_argument);
}

TEST_CASE("A_m preserves constants and affine relations") {
  const NestedMeshPair p = make_pair(8, 8, 2, 4, 1500.0);
  const Remapper r(p);
  Rng rng(41);
  const MoistureRemapper mr(r, DryDensityContext::from_fine(r, random_density(p.fine, rng)));
  const Field one = Field::constant(Space::Vtheta, p.fine, 0.007);
  CHECK(max_abs(mr.restrict_mixing_ratio(one).values().array() - 0.007) <= 1e-15);
  const Field m = random_field(Space::Vtheta, p.fine, rng, 0.0, 0.01);
  const Field lhs = mr.restrict_mixing_ratio(2.0 * m + Field::constant(Space::Vtheta, p.fine, 0.1), Clip::none);
  const Field rhs = 2.0 * mr.restrict_mixing_ratio(m, Clip::none) + Field::constant(Space::Vtheta, p.coarse, 0.1);
  CHECK(max_diff(lhs, rhs) <= 1e-14);
}

TEST_CASE("restriction conserves moist mass per column") {
  const NestedMeshPair p = make_pair(8, 8, 2, 4, 2000.0);
  const Remapper r(p);
  Rng rng(43);
  const Field rho = random_density(p.fine, rng);
  const MoistureRemapper mr(r, DryDensityContext::from_fine(r, rho));
  for (int kind = 0; kind < 5; ++kind) {
    const Field m = adversarial_moisture(p.fine, rng, kind);
    const Field mc = mr.restrict_mixing_ratio(m, Clip::none);
    const Eigen::VectorXd fine = shifted_mass_by_coarse_column(p, *p.fine, m, rho);
    CHECK(rel_diff(column_moist_mass(mc, mr.dry().coarse()), fine) <= 1e-12);
    // The library's own column sums agree with the independent oracle.
    CHECK(rel_diff(sum_to_coarse(p, column_moist_mass(m, rho), 1), fine) <= 1e-13);
  }
}

TEST_CASE("identification then restriction is the identity") {
  const NestedMeshPair p = make_pair(8, 8, 2, 4, 1200.0);
  const Remapper r(p);
  Rng rng(47);
  for (bool from_fine : {true, false}) {
    const DryDensityContext dry = from_fine ? DryDensityContext::from_fine(r, random_density(p.fine, rng))
                                            : DryDensityContext::from_coarse(r, random_density(p.coarse, rng));
    const MoistureRemapper mr(r, dry);
    const Field m = random_field(Space::Vtheta, p.coarse, rng, 0.0, 0.02);
    const Field back = mr.restrict_mixing_ratio(mr.identify_mixing_ratio(m, Clip::none), Clip::none);
    CHECK(max_diff(back, m) <= 5e-15);
    const Field again = mr.restrict_mixing_ratio(mr.prolong_unlimited(m), Clip::none);
    CHECK(max_diff(again, m) <= 5e-15);
  }
}

TEST_CASE("smooth fields need no limiting") {
  const NestedMeshPair p = make_pair(16, 16, 2, 4, 1000.0);
  const Remapper r(p);
  const MoistureRemapper mr(r, DryDensityContext::from_coarse(r, physics_density(p.coarse)));
  RemapStats stats;
  const Field m = smooth_moisture(p.coarse);
  const Field out = mr.prolong_mixing_ratio(m, &stats);
  CHECK(stats.limited_cells == 0);
  CHECK(max_diff(out, mr.prolong_unlimited(m)) == 0.0);
}

TEST_CASE("steep fronts are limited and stay non-negative") {
  const NestedMeshPair p = make_pair(16, 16, 2, 4);
  const Remapper r(p);
  const Field rho_c = physics_density(p.coarse);
  const MoistureRemapper mr(r, DryDensityContext::from_coarse(r, rho_c));
  Field m = Field::zero(Space::Vtheta, p.coarse);
  const HorizontalMesh& h = p.coarse->horizontal();
  for (int j = 0; j < h.ny; ++j)
    for (int k = 0; k <= 4; ++k) m[p.coarse->level_dof(h.column(3, j), k)] = 0.01;
  RemapStats stats;
  const Field out = mr.prolong_mixing_ratio(m, &stats);
  CHECK(stats.limited_cells > 0);
  CHECK(mr.prolong_unlimited(m).values().minCoeff() < 0.0);
  CHECK(out.values().minCoeff() >= 0.0);
  // Mass is kept because the identified field needed no clipping here.
  CHECK(stats.clipped_extrapolations == 0);
  const Eigen::VectorXd fine = shifted_mass_by_coarse_column(p, *p.fine, out, mr.dry().fine());
  CHECK(rel_diff(fine, column_moist_mass(m, rho_c)) <= 1e-12);
}

TEST_CASE("species share one lambda") {
  const NestedMeshPair p = make_pair(16, 16, 2, 4);
  const Remapper r(p);
  const MoistureRemapper mr(r, DryDensityContext::from_coarse(r, physics_density(p.coarse)));
  Field front = Field::zero(Space::Vtheta, p.coarse);
  const HorizontalMesh& h = p.coarse->horizontal();
  for (int j = 0; j < h.ny; ++j)
    for (int k = 0; k <= 4; ++k) front[p.coarse->level_dof(h.column(5, j), k)] = 0.01;
  const Field smooth = smooth_moisture(p.coarse);
  const std::vector<Field> both{front, smooth};
  const std::vector<Field> out = mr.prolong_mixing_ratios(both);
  std::vector<PositivityFactor> each;
  for (const Field& m : both)
    each.push_back(compute_lambda(p, mr.prolong_unlimited(m), mr.identify_mixing_ratio(m)));
  CHECK(each[1].lambda.values().maxCoeff() == 0.0);
  const PositivityFactor shared = couple_boundary_levels(max_lambda(each));
  CHECK(shared.lambda.values().maxCoeff() > 0.0);
  for (std::size_t s = 0; s < 2; ++s)
    CHECK(max_diff(out[s], blend(p, mr.prolong_unlimited(both[s]), mr.identify_mixing_ratio(both[s]), shared)) == 0.0);
  CHECK(max_diff(out[1], mr.prolong_unlimited(smooth)) > 0.0);
}

TEST_CASE("moisture mappings reject bad inputs") {
  const NestedMeshPair p = make_pair(4, 4, 2, 3);
  const Remapper r(p);
  CHECK_THROWS_AS(DryDensityContext::from_fine(r, Field::zero(Space::Vrho, p.fine)), std::domain_error);
  CHECK_THROWS_AS(DryDensityContext::from_coarse(r, Field::constant(Space::Vrho, p.fine, 1.0)), LayoutError);
  const MoistureRemapper mr(r, DryDensityContext::from_coarse(r, Field::constant(Space::Vrho, p.coarse, 1.0)));
  CHECK_THROWS_AS(mr.restrict_mixing_ratio(Field::zero(Space::Vtheta, p.coarse)), LayoutError);
  CHECK_THROWS_AS(mr.identify_mixing_ratio(Field::zero(Space::Vrho, p.coarse)), LayoutError);
}
