#pragma once

#include "nestfield/fields.hpp"
#include "nestfield/remap.hpp"

#include <span>
#include <vector>

namespace nestfield {

/// Counters for the nonlinear corrections inside the moisture mappings.
struct RemapStats {
  long clipped_extrapolations = 0;  // boundary values of M^-1 raised to zero
  long limited_cells = 0;           // coarse cells/levels with lambda > 0
};

enum class Clip { none, at_zero };

/// Q: Vrho -> VrhoShifted on the field's own mesh. Conserves column mass.
Field shift_density(const Field& rho);

/// M: Vtheta -> VrhoShifted. Interior levels copied, boundary layers averaged.
Field shift_mixing_ratio(const Field& m);

/// M^-1: VrhoShifted -> Vtheta. Interior copied back; the bottom and top
/// values are extrapolated linearly from the two nearest shifted values,
/// optionally raised to zero where the extrapolation goes negative. Needs Nk >= 2.
Field unshift_mixing_ratio(const Field& shifted, Clip clip = Clip::at_zero,
                           RemapStats* stats = nullptr);

/// Dry densities on both meshes of a pair, shared by every moisture mapping.
/// `fine` is the density the fine-mesh moist mass is measured against.
class DryDensityContext {
 public:
  /// Coarse density given; the fine density is B_rho of it.
  static DryDensityContext from_coarse(const Remapper& remap, Field coarse);
  /// Fine density given; the coarse density is A_rho of it.
  static DryDensityContext from_fine(const Remapper& remap, Field fine);

  const Field& fine() const { return fine_; }
  const Field& coarse() const { return coarse_; }
  const Field& fine_shifted() const { return fine_shifted_; }          // Q[rho_fine]
  const Field& coarse_shifted() const { return coarse_shifted_; }      // Q[rho_coarse]
  const Field& restricted_shifted() const { return restricted_shifted_; }  // Q[A_rho[rho_fine]]

 private:
  DryDensityContext(const Remapper& remap, Field fine, Field coarse);

  Field fine_;
  Field coarse_;
  Field fine_shifted_;
  Field coarse_shifted_;
  Field restricted_shifted_;
};

/// lambda per coarse cell and Vtheta level:
///   0 where all children of m_minus are >= 0, otherwise the largest
///   -m_minus / (m_plus - m_minus) over the negative children.
/// Throws if m_plus < 0 anywhere or the ratio is degenerate.
PositivityFactor compute_lambda(const NestedMeshPair& pair, const Field& m_minus,
                                const Field& m_plus);

/// Gives the two bottom and the two top Vtheta levels a common lambda (their
/// maximum). M averages those level pairs into one shifted layer, so blending
/// with a common factor keeps the shifted densities exact.
PositivityFactor couple_boundary_levels(const PositivityFactor& lambda);

/// Pointwise maximum of several factors.
PositivityFactor max_lambda(std::span<const PositivityFactor> factors);

/// Lambda: (1 - lambda) m_minus + lambda m_plus, each child taking its parent's lambda.
Field blend(const NestedMeshPair& pair, const Field& m_minus, const Field& m_plus,
            const PositivityFactor& lambda);

/// Mixing-ratio mappings A_m, I_m, B_m^dagger and B_m for one dry-density context.
class MoistureRemapper {
 public:
  MoistureRemapper(const Remapper& remap, DryDensityContext dry);

  const Remapper& remap() const { return *remap_; }
  const DryDensityContext& dry() const { return dry_; }

  /// A_m = M^-1[ A_rho[ M[m] Q[rho_fine] ] / Q[A_rho[rho_fine]] ]
  Field restrict_mixing_ratio(const Field& fine, Clip clip = Clip::at_zero,
                              RemapStats* stats = nullptr) const;
  /// I_m = M^-1[ I_rho[ M[m] Q[rho_coarse] ] / Q[rho_fine] ]
  Field identify_mixing_ratio(const Field& coarse, Clip clip = Clip::at_zero,
                              RemapStats* stats = nullptr) const;
  /// B_m^dagger = R - I_m A_m R + I_m, built from the unclipped (linear) maps.
  Field prolong_unlimited(const Field& coarse) const;
  /// B_m = (1 - lambda) B_m^dagger + lambda I_m.
  Field prolong_mixing_ratio(const Field& coarse, RemapStats* stats = nullptr) const;
  /// B_m for several species sharing one lambda (the per-cell maximum).
  std::vector<Field> prolong_mixing_ratios(std::span<const Field> species,
                                           RemapStats* stats = nullptr) const;

 private:
  const Remapper* remap_;
  DryDensityContext dry_;
};

/// Moist mass sum_k M[m]_k Q[rho]_k V~_k per column of the fields' mesh.
Eigen::VectorXd column_moist_mass(const Field& m, const Field& rho_dry);

}  // namespace nestfield
