#pragma once

#include "nestfield/experiments.hpp"
#include "nestfield/properties.hpp"
#include "nestfield/remap.hpp"

#include <Eigen/Core>

#include <cmath>

namespace nftest {

using namespace nestfield;

// Fine mesh of nx x ny columns, 1 km cells, optional cos^2 bump.
inline NestedMeshPair make_pair(int nx, int ny, int ratio, int layers, double bump = 0.0,
                                double z_top = 10000.0) {
  HorizontalMesh fine{nx, ny, 1000.0 * nx, 1000.0 * ny, 0};
  const Orography oro = bump > 0.0 ? bump_orography(fine, bump) : Orography::flat(fine);
  return build_nested_pair(fine, VerticalGrid::uniform(layers, z_top), ratio, oro);
}

inline double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
inline double max_diff(const Field& a, const Field& b) { return max_abs(a.values() - b.values()); }
inline double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return max_abs(a - b) / max_abs(b);
}

// Per-coarse-column moist mass of a fine Vtheta field, summed independently
// of column_moist_mass: sum over shifted layers of M[m] Q[rho] V~.
inline Eigen::VectorXd shifted_mass_by_coarse_column(const NestedMeshPair& pair, const ExtrudedMesh& mesh,
                                                      const Field& m, const Field& rho) {
  const int nk = mesh.layers();
  const Eigen::VectorXd& vol = mesh.cell_volumes();
  const Eigen::VectorXd& svol = mesh.shifted_volumes();
  const bool fine = &mesh == pair.fine.get();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(pair.coarse->columns());
  for (int c = 0; c < mesh.columns(); ++c) {
    double total = 0.0;
    for (int k = 0; k <= nk; ++k) {
      // M[m]
      double mm = m[mesh.level_dof(c, k)];
      if (k == 0) mm = 0.5 * (m[mesh.level_dof(c, 0)] + m[mesh.level_dof(c, 1)]);
      if (k == nk) mm = 0.5 * (m[mesh.level_dof(c, nk - 1)] + m[mesh.level_dof(c, nk)]);
      // Q[rho] V~ is half the dry mass of each adjacent primary cell
      double dry = 0.0;
      if (k > 0) dry += 0.5 * rho[mesh.cell_dof(c, k - 1)] * vol[mesh.cell_dof(c, k - 1)];
      if (k < nk) dry += 0.5 * rho[mesh.cell_dof(c, k)] * vol[mesh.cell_dof(c, k)];
      (void)svol;
      total += mm * dry;
    }
    out[fine ? pair.nesting.parent[c] : c] += total;
  }
  return out;
}

}  // namespace nftest
