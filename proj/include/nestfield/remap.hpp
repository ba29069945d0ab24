#pragma once

#include "nestfield/fields.hpp"
#include "nestfield/mesh.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <vector>

namespace nestfield {

using SparseOp = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Linear reconstruction stencil: each fine column takes a weighted sum over
/// the 3x3 block of coarse columns centred on its parent. Coefficients come
/// from a least-squares plane fit evaluated at the fine-cell centroid.
struct ReconstructionWeights {
  static constexpr int stencil_size = 9;
  std::vector<std::array<int, stencil_size>> neighbours;     // coarse columns
  std::vector<std::array<double, stencil_size>> coefficients;

  static ReconstructionWeights least_squares_plane(const NestedMeshPair& pair);
};

/// Precomputed level-wise sparse operators of a mesh pair. Rows index the
/// target DoFs, columns the source DoFs, in the ordering of ExtrudedMesh.
struct OperatorWeights {
  SparseOp mean_cells;             // A_Pi on Vrho
  SparseOp mean_levels;            // A_theta on Vtheta
  SparseOp copy_cells;             // I_Pi on Vrho
  SparseOp copy_levels;            // I_theta on Vtheta
  SparseOp reconstruct_cells;      // R on Vrho
  SparseOp reconstruct_levels;     // R on Vtheta / shifted
  SparseOp restrict_density;       // A_rho, weights Vfine / Vcoarse
  SparseOp identify_density;       // I_rho, weights Vcoarse / (N Vfine)
  SparseOp restrict_shifted;       // A_rho on the shifted meshes
  SparseOp identify_shifted;       // I_rho on the shifted meshes
  SparseOp restrict_wind;          // A_u, exterior faces only
  SparseOp prolong_wind;           // B_u
};

/// Restriction, identification, reconstruction and prolongation between the
/// two meshes of a pair. All operators are linear maps and apply() calls are
/// const and reentrant.
class Remapper {
 public:
  explicit Remapper(NestedMeshPair pair);

  const NestedMeshPair& pair() const { return pair_; }
  const MeshHandle& fine() const { return pair_.fine; }
  const MeshHandle& coarse() const { return pair_.coarse; }
  const OperatorWeights& weights() const { return weights_; }
  const ReconstructionWeights& reconstruction() const { return reconstruction_; }

  // Pi / theta family. Vrho and Vtheta fields are handled level by level.
  Field restrict_scalar(const Field& fine) const;      // A_Pi
  Field identify_scalar(const Field& coarse) const;    // I_Pi
  Field reconstruct_scalar(const Field& coarse) const; // R_Pi
  Field prolong_scalar(const Field& coarse) const;     // B_Pi = R - I A R + I

  // Density family; accepts Vrho or VrhoShifted.
  Field restrict_density(const Field& fine) const;     // A_rho
  Field identify_density(const Field& coarse) const;   // I_rho
  Field prolong_density(const Field& coarse) const;    // B_rho with R_rho = R_Pi

  Field restrict_wind(const Field& fine) const;        // A_u
  Field prolong_wind(const Field& coarse) const;       // B_u

  /// Test hook: scales one A_rho weight so conservation checks must fail.
  void corrupt_density_weights(double factor);

 private:
  NestedMeshPair pair_;
  ReconstructionWeights reconstruction_;
  OperatorWeights weights_;
};

/// Sums per-cell fine values into their coarse parents, level by level.
/// `levels` is Nk for cell data and Nk+1 for level or shifted data.
Eigen::VectorXd sum_to_coarse(const NestedMeshPair& pair, const Eigen::VectorXd& fine_values,
                              int levels);

/// Sums per-cell values of one mesh into per-column totals.
Eigen::VectorXd sum_columns(const ExtrudedMesh& mesh, const Eigen::VectorXd& values, int levels);

}  // namespace nestfield
