#include "nestfield/moisture.hpp"

#include <algorithm>
#include <stdexcept>

namespace nestfield {

Field shift_density(const Field& rho) {
  require_layout(rho, Space::Vrho, "shift_density");
  const ExtrudedMesh& mesh = rho.mesh();
  const int nk = mesh.layers();
  const Eigen::VectorXd& vol = mesh.cell_volumes();
  const Eigen::VectorXd& svol = mesh.shifted_volumes();
  Field out(Space::VrhoShifted, rho.mesh_handle());
  for (int c = 0; c < mesh.columns(); ++c) {
    auto mass = [&](int k) { return rho[mesh.cell_dof(c, k)] * vol[mesh.cell_dof(c, k)]; };
    const Eigen::Index base = mesh.level_dof(c, 0);
    out[base] = mass(0) / (2.0 * svol[base]);
    for (int k = 1; k < nk; ++k) out[base + k] = (mass(k - 1) + mass(k)) / (2.0 * svol[base + k]);
    out[base + nk] = mass(nk - 1) / (2.0 * svol[base + nk]);
  }
  return out;
}

Field shift_mixing_ratio(const Field& m) {
  require_layout(m, Space::Vtheta, "shift_mixing_ratio");
  const ExtrudedMesh& mesh = m.mesh();
  const int nk = mesh.layers();
  Field out(Space::VrhoShifted, m.mesh_handle(), m.values());
  for (int c = 0; c < mesh.columns(); ++c) {
    const Eigen::Index base = mesh.level_dof(c, 0);
    out[base] = 0.5 * (m[base] + m[base + 1]);
    out[base + nk] = 0.5 * (m[base + nk - 1] + m[base + nk]);
  }
  return out;
}

Field unshift_mixing_ratio(const Field& shifted, Clip clip, RemapStats* stats) {
  require_layout(shifted, Space::VrhoShifted, "unshift_mixing_ratio");
  const ExtrudedMesh& mesh = shifted.mesh();
  const int nk = mesh.layers();
  if (nk < 2) throw std::invalid_argument("unshift_mixing_ratio: needs at least two layers");
  Field out(Space::Vtheta, shifted.mesh_handle(), shifted.values());
  long clipped = 0;
  auto finish = [&](double v) {
    if (clip == Clip::at_zero && v < 0.0) {
      ++clipped;
      return 0.0;
    }
    return v;
  };
  for (int c = 0; c < mesh.columns(); ++c) {
    const Eigen::Index base = mesh.level_dof(c, 0);
    out[base] = finish(2.0 * shifted[base] - shifted[base + 1]);
    out[base + nk] = finish(2.0 * shifted[base + nk] - shifted[base + nk - 1]);
  }
  if (stats) stats->clipped_extrapolations += clipped;
  return out;
}

namespace {

void require_positive(const Field& f, const char* what) {
  if (!(f.values().array() > 0.0).all())
    throw std::domain_error(std::string(what) + ": dry density must be strictly positive");
}

}  // namespace

DryDensityContext::DryDensityContext(const Remapper& remap, Field fine, Field coarse)
    : fine_(std::move(fine)),
      coarse_(std::move(coarse)),
      fine_shifted_(shift_density(fine_)),
      coarse_shifted_(shift_density(coarse_)),
      restricted_shifted_(shift_density(remap.restrict_density(fine_))) {}

DryDensityContext DryDensityContext::from_coarse(const Remapper& remap, Field coarse) {
  require_mesh(coarse, remap.coarse(), "DryDensityContext");
  require_layout(coarse, Space::Vrho, "DryDensityContext");
  require_positive(coarse, "DryDensityContext");
  Field fine = remap.prolong_density(coarse);
  require_positive(fine, "DryDensityContext (prolonged)");
  return DryDensityContext(remap, std::move(fine), std::move(coarse));
}

DryDensityContext DryDensityContext::from_fine(const Remapper& remap, Field fine) {
  require_mesh(fine, remap.fine(), "DryDensityContext");
  require_layout(fine, Space::Vrho, "DryDensityContext");
  require_positive(fine, "DryDensityContext");
  Field coarse = remap.restrict_density(fine);
  require_positive(coarse, "DryDensityContext (restricted)");
  return DryDensityContext(remap, std::move(fine), std::move(coarse));
}

PositivityFactor compute_lambda(const NestedMeshPair& pair, const Field& m_minus,
                                const Field& m_plus) {
  require_mesh(m_minus, pair.fine, "compute_lambda");
  require_layout(m_minus, Space::Vtheta, "compute_lambda");
  require_same_layout(m_minus, m_plus, "compute_lambda");
  if ((m_plus.values().array() < 0.0).any())
    throw std::domain_error("compute_lambda: the guaranteed-nonnegative field has negative values");

  const ExtrudedMesh& fm = *pair.fine;
  const int levels = fm.layers() + 1;
  Field lambda(Space::Vtheta, pair.coarse);
  for (int c = 0; c < pair.coarse->columns(); ++c)
    for (int k = 0; k < levels; ++k) {
      double lam = 0.0;
      for (int f : pair.nesting.cells_of[c]) {
        const Eigen::Index d = fm.level_dof(f, k);
        const double lo = m_minus[d];
        if (lo >= 0.0) continue;
        const double gap = m_plus[d] - lo;
        if (!(gap > 0.0)) throw std::domain_error("compute_lambda: degenerate blending denominator");
        lam = std::max(lam, -lo / gap);
      }
      lambda[pair.coarse->level_dof(c, k)] = std::min(lam, 1.0);
    }
  return PositivityFactor(std::move(lambda));
}

PositivityFactor couple_boundary_levels(const PositivityFactor& lambda) {
  Field out = lambda.lambda;
  const ExtrudedMesh& mesh = out.mesh();
  const int nk = mesh.layers();
  for (int c = 0; c < mesh.columns(); ++c) {
    const Eigen::Index b = mesh.level_dof(c, 0);
    if (nk < 3) {
      const double m = out.values().segment(b, nk + 1).maxCoeff();
      out.values().segment(b, nk + 1).setConstant(m);
      continue;
    }
    const double lo = std::max(out[b], out[b + 1]);
    out[b] = out[b + 1] = lo;
    const double hi = std::max(out[b + nk - 1], out[b + nk]);
    out[b + nk - 1] = out[b + nk] = hi;
  }
  return PositivityFactor(std::move(out));
}

PositivityFactor max_lambda(std::span<const PositivityFactor> factors) {
  if (factors.empty()) throw std::invalid_argument("max_lambda: no factors");
  Field out = factors.front().lambda;
  for (const auto& f : factors.subspan(1)) {
    require_same_layout(out, f.lambda, "max_lambda");
    out.values() = out.values().cwiseMax(f.lambda.values());
  }
  return PositivityFactor(std::move(out));
}

Field blend(const NestedMeshPair& pair, const Field& m_minus, const Field& m_plus,
            const PositivityFactor& lambda) {
  require_mesh(m_minus, pair.fine, "blend");
  require_layout(m_minus, Space::Vtheta, "blend");
  require_same_layout(m_minus, m_plus, "blend");
  require_mesh(lambda.lambda, pair.coarse, "blend");
  const ExtrudedMesh& fm = *pair.fine;
  const int levels = fm.layers() + 1;
  Field out(Space::Vtheta, pair.fine);
  for (int f = 0; f < fm.columns(); ++f) {
    const int c = pair.nesting.parent[f];
    for (int k = 0; k < levels; ++k) {
      const double lam = lambda.lambda[pair.coarse->level_dof(c, k)];
      const Eigen::Index d = fm.level_dof(f, k);
      out[d] = (1.0 - lam) * m_minus[d] + lam * m_plus[d];
    }
  }
  return out;
}

MoistureRemapper::MoistureRemapper(const Remapper& remap, DryDensityContext dry)
    : remap_(&remap), dry_(std::move(dry)) {
  require_mesh(dry_.fine(), remap.fine(), "MoistureRemapper");
  require_mesh(dry_.coarse(), remap.coarse(), "MoistureRemapper");
}

Field MoistureRemapper::restrict_mixing_ratio(const Field& fine, Clip clip, RemapStats* stats) const {
  require_mesh(fine, remap_->fine(), "restrict_mixing_ratio");
  require_layout(fine, Space::Vtheta, "restrict_mixing_ratio");
  const Field moist = pointwise_mul(shift_mixing_ratio(fine), dry_.fine_shifted());
  const Field ratio = pointwise_div(remap_->restrict_density(moist), dry_.restricted_shifted());
  return unshift_mixing_ratio(ratio, clip, stats);
}

Field MoistureRemapper::identify_mixing_ratio(const Field& coarse, Clip clip, RemapStats* stats) const {
  require_mesh(coarse, remap_->coarse(), "identify_mixing_ratio");
  require_layout(coarse, Space::Vtheta, "identify_mixing_ratio");
  const Field moist = pointwise_mul(shift_mixing_ratio(coarse), dry_.coarse_shifted());
  const Field ratio = pointwise_div(remap_->identify_density(moist), dry_.fine_shifted());
  return unshift_mixing_ratio(ratio, clip, stats);
}

Field MoistureRemapper::prolong_unlimited(const Field& coarse) const {
  const Field rec = remap_->reconstruct_scalar(coarse);
  return rec - identify_mixing_ratio(restrict_mixing_ratio(rec, Clip::none), Clip::none) +
         identify_mixing_ratio(coarse, Clip::none);
}

Field MoistureRemapper::prolong_mixing_ratio(const Field& coarse, RemapStats* stats) const {
  return prolong_mixing_ratios(std::span<const Field>(&coarse, 1), stats).front();
}

std::vector<Field> MoistureRemapper::prolong_mixing_ratios(std::span<const Field> species,
                                                           RemapStats* stats) const {
  std::vector<Field> unlimited, identified;
  std::vector<PositivityFactor> factors;
  for (const Field& m : species) {
    unlimited.push_back(prolong_unlimited(m));
    identified.push_back(identify_mixing_ratio(m, Clip::at_zero, stats));
    factors.push_back(compute_lambda(remap_->pair(), unlimited.back(), identified.back()));
  }
  const PositivityFactor lambda = couple_boundary_levels(max_lambda(factors));
  if (stats) stats->limited_cells += (lambda.lambda.values().array() > 0.0).count();
  std::vector<Field> out;
  for (std::size_t s = 0; s < species.size(); ++s)
    out.push_back(blend(remap_->pair(), unlimited[s], identified[s], lambda));
  return out;
}

Eigen::VectorXd column_moist_mass(const Field& m, const Field& rho_dry) {
  require_layout(m, Space::Vtheta, "column_moist_mass");
  require_layout(rho_dry, Space::Vrho, "column_moist_mass");
  if (m.mesh_handle() != rho_dry.mesh_handle())
    throw LayoutError("column_moist_mass: fields are on different meshes");
  const Field moist = pointwise_mul(shift_mixing_ratio(m), shift_density(rho_dry));
  return sum_columns(m.mesh(), cell_masses(moist), m.mesh().layers() + 1);
}

}  // namespace nestfield
