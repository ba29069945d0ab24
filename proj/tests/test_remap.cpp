#include "support.hpp"

#include "nestfield/moisture.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace nftest;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Fine Vrho field of a function of the column centre and level.
Field sample(const MeshHandle& m, double (*fn)(double, double, int)) {
  Field f = Field::zero(Space::Vrho, m);
  const HorizontalMesh& h = m->horizontal();
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k < m->layers(); ++k)
        f[m->cell_dof(h.column(i, j), k)] = fn(h.centre_x(i), h.centre_y(j), k);
  return f;
}

}  // namespace

TEST_CASE("mean of four children") {
  const NestedMeshPair p = make_pair(2, 2, 2, 1);
  const Remapper r(p);
  Field f = Field::zero(Space::Vrho, p.fine);
  f.values() << 1, 2, 3, 4;
  CHECK_THAT(r.restrict_scalar(f)[0], WithinRel(2.5, 1e-15));
  const Field c = Field::constant(Space::Vtheta, p.coarse, 7.0);
  const Field back = r.identify_scalar(c);
  for (double v : back.values()) CHECK(v == 7.0);
}

TEST_CASE("density weights on a bump follow the volume formulas") {
  const NestedMeshPair p = make_pair(8, 8, 2, 3, 2000.0);
  const Remapper r(p);
  const ExtrudedMesh& f = *p.fine;
  const ExtrudedMesh& c = *p.coarse;
  Rng rng(5);
  const Field rho = random_density(p.fine, rng);
  const Field coarse = r.restrict_density(rho);
  const Field back = r.identify_density(coarse);
  for (int cc = 0; cc < c.columns(); ++cc)
    for (int k = 0; k < c.layers(); ++k) {
      double m = 0;
      for (int fc : p.nesting.cells_of[cc]) m += rho[f.cell_dof(fc, k)] * f.cell_volumes()[f.cell_dof(fc, k)];
      const Eigen::Index row = c.cell_dof(cc, k);
      CHECK_THAT(coarse[row], WithinRel(m / c.cell_volumes()[row], 1e-13));
      for (int fc : p.nesting.cells_of[cc]) {
        const Eigen::Index d = f.cell_dof(fc, k);
        CHECK_THAT(back[d], WithinRel(coarse[row] * c.cell_volumes()[row] / (4 * f.cell_volumes()[d]), 1e-13));
      }
    }
}

TEST_CASE("wind restriction and prolongation examples") {
  HorizontalMesh h{4, 2, 4.0, 2.0, 0};
  const NestedMeshPair p = build_nested_pair(h, VerticalGrid::uniform(1, 1.0), 2, Orography::flat(h));
  const Remapper r(p);
  const ExtrudedMesh& f = *p.fine;
  const ExtrudedMesh& c = *p.coarse;
  Field u = Field::zero(Space::Vu, p.fine);
  // The east face of coarse column 0 is made of the east faces of fine (1,0) and (1,1).
  u[f.face_dof(FaceDir::x, f.horizontal().column(1, 0), 0)] = 1.0;
  u[f.face_dof(FaceDir::x, f.horizontal().column(1, 1), 0)] = 3.0;
  const Field uc = r.restrict_wind(u);
  CHECK_THAT(uc[c.face_dof(FaceDir::x, 0, 0)], WithinRel(2.0, 1e-15));

  Field w = Field::zero(Space::Vu, p.coarse);
  w[c.face_dof(FaceDir::x, c.horizontal().column(1, 0), 0)] = 0.0;  // west side of coarse column 0 wraps
  w[c.face_dof(FaceDir::x, c.horizontal().column(0, 0), 0)] = 4.0;
  const Field wf = r.prolong_wind(w);
  // Interior face between fine (0,0) and (1,0) sits half way.
  CHECK_THAT(wf[f.face_dof(FaceDir::x, f.horizontal().column(0, 0), 0)], WithinRel(2.0, 1e-15));
  CHECK_THAT(wf[f.face_dof(FaceDir::x, f.horizontal().column(1, 0), 0)], WithinRel(4.0, 1e-15));
  // Exterior faces get the coarse flux back exactly.
  CHECK(max_diff(r.restrict_wind(wf), w) <= 1e-14);
}

TEST_CASE("reconstruction is exact for linear fields") {
  const NestedMeshPair p = make_pair(12, 12, 2, 2);
  const Remapper r(p);
  // Linear in x, y inside a periodic domain is only linear away from the seam,
  // so test on columns whose stencil does not wrap.
  Field c = Field::zero(Space::Vrho, p.coarse);
  const HorizontalMesh& ch = p.coarse->horizontal();
  for (int J = 0; J < ch.ny; ++J)
    for (int I = 0; I < ch.nx; ++I)
      for (int k = 0; k < 2; ++k) c[p.coarse->cell_dof(ch.column(I, J), k)] = 3 + 0.002 * ch.centre_x(I) - 0.001 * ch.centre_y(J) + k;
  const Field f = r.reconstruct_scalar(c);
  const Field b = r.prolong_scalar(c);
  const HorizontalMesh& fh = p.fine->horizontal();
  for (int j = 2; j < fh.ny - 2; ++j)
    for (int i = 2; i < fh.nx - 2; ++i)
      for (int k = 0; k < 2; ++k) {
        const double exact = 3 + 0.002 * fh.centre_x(i) - 0.001 * fh.centre_y(j) + k;
        CHECK_THAT(f[p.fine->cell_dof(fh.column(i, j), k)], WithinAbs(exact, 1e-11));
        CHECK_THAT(b[p.fine->cell_dof(fh.column(i, j), k)], WithinAbs(exact, 1e-11));
      }
  for (const auto& cs : r.reconstruction().coefficients) {
    double s = 0;
    for (double w : cs) s += w;
    CHECK_THAT(s, WithinAbs(1.0, 1e-14));
  }
}

TEST_CASE("prolongation error falls at second order") {
  auto error = [](int n) {
    HorizontalMesh h{n, n, 1.0, 1.0, 0};
    const NestedMeshPair p = build_nested_pair(h, VerticalGrid::uniform(1, 1.0), 2, Orography::flat(h));
    const Remapper r(p);
    auto fn = [](double x, double y, int) {
      return std::sin(2 * std::numbers::pi * x) * std::cos(2 * std::numbers::pi * y);
    };
    const Field exact = sample(p.fine, fn);
    const Field coarse = sample(p.coarse, fn);
    return max_abs(r.prolong_scalar(coarse).values() - exact.values());
  };
  const double e1 = error(32), e2 = error(64), e3 = error(128);
  CHECK(e1 / e2 > 3.5);
  CHECK(e2 / e3 > 3.7);
}

TEST_CASE("density mappings conserve mass") {
  for (double bump : {0.0, 2000.0}) {
    const NestedMeshPair p = make_pair(8, 6, 2, 3, bump);
    const Remapper r(p);
    Rng rng(17);
    const Field rf = random_density(p.fine, rng);
    const Field rc = random_density(p.coarse, rng);
    CHECK_THAT(total_mass(r.restrict_density(rf)), WithinRel(total_mass(rf), 1e-13));
    CHECK_THAT(total_mass(r.identify_density(rc)), WithinRel(total_mass(rc), 1e-13));
    CHECK_THAT(total_mass(r.prolong_density(rc)), WithinRel(total_mass(rc), 1e-13));
    // Identification then restriction is the identity.
    CHECK(rel_diff(r.restrict_density(r.identify_density(rc)).values(), rc.values()) <= 1e-13);
    CHECK(rel_diff(r.restrict_density(r.prolong_density(rc)).values(), rc.values()) <= 1e-13);
    CHECK(rel_diff(r.restrict_scalar(r.prolong_scalar(rc)).values(), rc.values()) <= 1e-13);
    // Per coarse column.
    const Eigen::VectorXd fine_cols = sum_to_coarse(p, cell_masses(r.prolong_density(rc)), 3);
    CHECK(rel_diff(fine_cols, cell_masses(rc)) <= 1e-13);
  }
}

TEST_CASE("shift commutes with density restriction and identification") {
  const NestedMeshPair p = make_pair(8, 8, 2, 4, 1800.0);
  const Remapper r(p);
  Rng rng(23);
  const Field rf = random_density(p.fine, rng);
  const Field rc = random_density(p.coarse, rng);
  CHECK(rel_diff(shift_density(r.restrict_density(rf)).values(),
                 r.restrict_density(shift_density(rf)).values()) <= 1e-13);
  CHECK(rel_diff(shift_density(r.identify_density(rc)).values(),
                 r.identify_density(shift_density(rc)).values()) <= 1e-13);
}

TEST_CASE("mappings are linear and map zero to zero") {
  const NestedMeshPair p = make_pair(8, 8, 2, 2, 1000.0);
  const Remapper r(p);
  Rng rng(29);
  const Field a = random_field(Space::Vrho, p.coarse, rng), b = random_field(Space::Vrho, p.coarse, rng);
  const Field lin = r.prolong_density(2.0 * a - b);
  CHECK(max_abs(lin.values() - (2.0 * r.prolong_density(a) - r.prolong_density(b)).values()) <= 1e-13);
  CHECK(max_abs(r.prolong_scalar(Field::zero(Space::Vtheta, p.coarse)).values()) == 0.0);
  CHECK(max_abs(r.prolong_wind(Field::zero(Space::Vu, p.coarse)).values()) == 0.0);
  CHECK_THROWS_AS(r.restrict_density(Field::zero(Space::Vtheta, p.fine)), LayoutError);
  CHECK_THROWS_AS(r.restrict_scalar(Field::zero(Space::Vrho, p.coarse)), LayoutError);
}
