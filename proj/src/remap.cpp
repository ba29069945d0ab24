#include "nestfield/remap.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace nestfield {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseOp from_triplets(Eigen::Index rows, Eigen::Index cols, const Triplets& t) {
  SparseOp op(rows, cols);
  op.setFromTriplets(t.begin(), t.end());
  op.makeCompressed();
  return op;
}

// Level-wise arithmetic mean over the children of each coarse column.
SparseOp build_mean(const NestedMeshPair& p, int levels) {
  const double w = 1.0 / p.nesting.children_per_cell();
  Triplets t;
  for (int c = 0; c < p.coarse->columns(); ++c)
    for (int f : p.nesting.cells_of[c])
      for (int k = 0; k < levels; ++k) t.emplace_back(c * levels + k, f * levels + k, w);
  return from_triplets(Eigen::Index(p.coarse->columns()) * levels,
                       Eigen::Index(p.fine->columns()) * levels, t);
}

SparseOp build_copy(const NestedMeshPair& p, int levels) {
  Triplets t;
  for (int f = 0; f < p.fine->columns(); ++f)
    for (int k = 0; k < levels; ++k) t.emplace_back(f * levels + k, p.nesting.parent[f] * levels + k, 1.0);
  return from_triplets(Eigen::Index(p.fine->columns()) * levels,
                       Eigen::Index(p.coarse->columns()) * levels, t);
}

SparseOp build_reconstruct(const NestedMeshPair& p, const ReconstructionWeights& rw, int levels) {
  Triplets t;
  for (int f = 0; f < p.fine->columns(); ++f)
    for (int l = 0; l < ReconstructionWeights::stencil_size; ++l)
      for (int k = 0; k < levels; ++k)
        t.emplace_back(f * levels + k, rw.neighbours[f][l] * levels + k, rw.coefficients[f][l]);
  return from_triplets(Eigen::Index(p.fine->columns()) * levels,
                       Eigen::Index(p.coarse->columns()) * levels, t);
}

SparseOp build_volume_restrict(const NestedMeshPair& p, const Eigen::VectorXd& vf,
                               const Eigen::VectorXd& vc, int levels) {
  Triplets t;
  for (int c = 0; c < p.coarse->columns(); ++c)
    for (int f : p.nesting.cells_of[c])
      for (int k = 0; k < levels; ++k) {
        const Eigen::Index row = Eigen::Index(c) * levels + k;
        const Eigen::Index col = Eigen::Index(f) * levels + k;
        t.emplace_back(row, col, vf[col] / vc[row]);
      }
  return from_triplets(vc.size(), vf.size(), t);
}

SparseOp build_volume_identify(const NestedMeshPair& p, const Eigen::VectorXd& vf,
                               const Eigen::VectorXd& vc, int levels) {
  const double n = p.nesting.children_per_cell();
  Triplets t;
  for (int f = 0; f < p.fine->columns(); ++f)
    for (int k = 0; k < levels; ++k) {
      const Eigen::Index row = Eigen::Index(f) * levels + k;
      const Eigen::Index col = Eigen::Index(p.nesting.parent[f]) * levels + k;
      t.emplace_back(row, col, vc[col] / (n * vf[row]));
    }
  return from_triplets(vf.size(), vc.size(), t);
}

SparseOp build_wind_restrict(const NestedMeshPair& p) {
  const Eigen::VectorXd& af = p.fine->face_areas();
  const Eigen::VectorXd& ac = p.coarse->face_areas();
  Triplets t;
  for (Eigen::Index cf = 0; cf < ac.size(); ++cf)
    for (Eigen::Index ff : p.nesting.faces_of[cf]) t.emplace_back(cf, ff, af[ff] / ac[cf]);
  return from_triplets(ac.size(), af.size(), t);
}

SparseOp build_wind_prolong(const NestedMeshPair& p) {
  const ExtrudedMesh& fm = *p.fine;
  const ExtrudedMesh& cm = *p.coarse;
  const Eigen::VectorXd& af = fm.face_areas();
  const Eigen::VectorXd& ac = cm.face_areas();
  const int r = p.ratio();
  Triplets t;
  for (Eigen::Index ff = 0; ff < af.size(); ++ff) {
    const Eigen::Index cf = p.nesting.face_parent[ff];
    if (cf < 0) continue;
    const double ng = static_cast<double>(p.nesting.faces_of[cf].size());
    t.emplace_back(ff, cf, ac[cf] / (ng * af[ff]));
  }
  // Interior lateral faces: linear interpolation between the opposite faces
  // of the parent cell, at the fine face's fractional position.
  const HorizontalMesh& fh = fm.horizontal();
  const HorizontalMesh& ch = cm.horizontal();
  for (int j = 0; j < fh.ny; ++j)
    for (int i = 0; i < fh.nx; ++i) {
      const int fc = fh.column(i, j);
      const int I = i / r, J = j / r;
      for (int k = 0; k < fm.layers(); ++k) {
        if ((i + 1) % r != 0) {
          const double s = double((i + 1) % r) / r;
          t.emplace_back(fm.face_dof(FaceDir::x, fc, k), cm.face_dof(FaceDir::x, ch.column(I - 1, J), k), 1.0 - s);
          t.emplace_back(fm.face_dof(FaceDir::x, fc, k), cm.face_dof(FaceDir::x, ch.column(I, J), k), s);
        }
        if ((j + 1) % r != 0) {
          const double s = double((j + 1) % r) / r;
          t.emplace_back(fm.face_dof(FaceDir::y, fc, k), cm.face_dof(FaceDir::y, ch.column(I, J - 1), k), 1.0 - s);
          t.emplace_back(fm.face_dof(FaceDir::y, fc, k), cm.face_dof(FaceDir::y, ch.column(I, J), k), s);
        }
      }
    }
  return from_triplets(af.size(), ac.size(), t);
}

}  // namespace

ReconstructionWeights ReconstructionWeights::least_squares_plane(const NestedMeshPair& p) {
  const HorizontalMesh& fh = p.fine->horizontal();
  const HorizontalMesh& ch = p.coarse->horizontal();
  const int r = p.ratio();

  Eigen::Matrix<double, stencil_size, 3> design;
  for (int q = -1, row = 0; q <= 1; ++q)
    for (int s = -1; s <= 1; ++s, ++row) design.row(row) << 1.0, s * ch.dx(), q * ch.dy();
  // Rows of the pseudo-inverse map stencil values to (mean, d/dx, d/dy).
  const Eigen::Matrix<double, 3, stencil_size> fit =
      (design.transpose() * design).ldlt().solve(design.transpose());

  ReconstructionWeights rw;
  rw.neighbours.resize(fh.columns());
  rw.coefficients.resize(fh.columns());
  for (int j = 0; j < fh.ny; ++j)
    for (int i = 0; i < fh.nx; ++i) {
      const int f = fh.column(i, j);
      const int I = i / r, J = j / r;
      const Eigen::RowVector3d at(1.0, fh.centre_x(i) - ch.centre_x(I), fh.centre_y(j) - ch.centre_y(J));
      const Eigen::Matrix<double, 1, stencil_size> c = at * fit;
      for (int q = -1, l = 0; q <= 1; ++q)
        for (int s = -1; s <= 1; ++s, ++l) {
          rw.neighbours[f][l] = ch.column(I + s, J + q);
          rw.coefficients[f][l] = c[l];
        }
    }
  return rw;
}

Remapper::Remapper(NestedMeshPair pair)
    : pair_(std::move(pair)), reconstruction_(ReconstructionWeights::least_squares_plane(pair_)) {
  const int nk = pair_.fine->layers();
  const ExtrudedMesh& fm = *pair_.fine;
  const ExtrudedMesh& cm = *pair_.coarse;
  weights_.mean_cells = build_mean(pair_, nk);
  weights_.mean_levels = build_mean(pair_, nk + 1);
  weights_.copy_cells = build_copy(pair_, nk);
  weights_.copy_levels = build_copy(pair_, nk + 1);
  weights_.reconstruct_cells = build_reconstruct(pair_, reconstruction_, nk);
  weights_.reconstruct_levels = build_reconstruct(pair_, reconstruction_, nk + 1);
  weights_.restrict_density = build_volume_restrict(pair_, fm.cell_volumes(), cm.cell_volumes(), nk);
  weights_.identify_density = build_volume_identify(pair_, fm.cell_volumes(), cm.cell_volumes(), nk);
  weights_.restrict_shifted =
      build_volume_restrict(pair_, fm.shifted_volumes(), cm.shifted_volumes(), nk + 1);
  weights_.identify_shifted =
      build_volume_identify(pair_, fm.shifted_volumes(), cm.shifted_volumes(), nk + 1);
  weights_.restrict_wind = build_wind_restrict(pair_);
  weights_.prolong_wind = build_wind_prolong(pair_);
}

namespace {

void require_scalar_space(const Field& f, const char* where) {
  if (f.space() != Space::Vrho && f.space() != Space::Vtheta && f.space() != Space::VrhoShifted)
    throw LayoutError(std::string(where) + ": expected a cell or level field");
}

void require_density_space(const Field& f, const char* where) {
  if (f.space() != Space::Vrho && f.space() != Space::VrhoShifted)
    throw LayoutError(std::string(where) + ": expected a Vrho or VrhoShifted field");
}

}  // namespace

Field Remapper::restrict_scalar(const Field& fine) const {
  require_mesh(fine, pair_.fine, "restrict_scalar");
  require_scalar_space(fine, "restrict_scalar");
  const SparseOp& op = fine.space() == Space::Vrho ? weights_.mean_cells : weights_.mean_levels;
  return Field(fine.space(), pair_.coarse, op * fine.values());
}

Field Remapper::identify_scalar(const Field& coarse) const {
  require_mesh(coarse, pair_.coarse, "identify_scalar");
  require_scalar_space(coarse, "identify_scalar");
  const SparseOp& op = coarse.space() == Space::Vrho ? weights_.copy_cells : weights_.copy_levels;
  return Field(coarse.space(), pair_.fine, op * coarse.values());
}

Field Remapper::reconstruct_scalar(const Field& coarse) const {
  require_mesh(coarse, pair_.coarse, "reconstruct_scalar");
  require_scalar_space(coarse, "reconstruct_scalar");
  const SparseOp& op =
      coarse.space() == Space::Vrho ? weights_.reconstruct_cells : weights_.reconstruct_levels;
  return Field(coarse.space(), pair_.fine, op * coarse.values());
}

Field Remapper::prolong_scalar(const Field& coarse) const {
  const Field rec = reconstruct_scalar(coarse);
  return rec - identify_scalar(restrict_scalar(rec)) + identify_scalar(coarse);
}

Field Remapper::restrict_density(const Field& fine) const {
  require_mesh(fine, pair_.fine, "restrict_density");
  require_density_space(fine, "restrict_density");
  const SparseOp& op =
      fine.space() == Space::Vrho ? weights_.restrict_density : weights_.restrict_shifted;
  return Field(fine.space(), pair_.coarse, op * fine.values());
}

Field Remapper::identify_density(const Field& coarse) const {
  require_mesh(coarse, pair_.coarse, "identify_density");
  require_density_space(coarse, "identify_density");
  const SparseOp& op =
      coarse.space() == Space::Vrho ? weights_.identify_density : weights_.identify_shifted;
  return Field(coarse.space(), pair_.fine, op * coarse.values());
}

Field Remapper::prolong_density(const Field& coarse) const {
  const Field rec = reconstruct_scalar(coarse);
  return rec - identify_density(restrict_density(rec)) + identify_density(coarse);
}

Field Remapper::restrict_wind(const Field& fine) const {
  require_mesh(fine, pair_.fine, "restrict_wind");
  require_layout(fine, Space::Vu, "restrict_wind");
  return Field(Space::Vu, pair_.coarse, weights_.restrict_wind * fine.values());
}

Field Remapper::prolong_wind(const Field& coarse) const {
  require_mesh(coarse, pair_.coarse, "prolong_wind");
  require_layout(coarse, Space::Vu, "prolong_wind");
  return Field(Space::Vu, pair_.fine, weights_.prolong_wind * coarse.values());
}

void Remapper::corrupt_density_weights(double factor) {
  if (weights_.restrict_density.nonZeros() == 0) return;
  weights_.restrict_density.valuePtr()[0] *= factor;
}

Eigen::VectorXd sum_to_coarse(const NestedMeshPair& p, const Eigen::VectorXd& fine_values,
                              int levels) {
  if (fine_values.size() != Eigen::Index(p.fine->columns()) * levels)
    throw LayoutError("sum_to_coarse: value count does not match the fine mesh");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(p.coarse->columns()) * levels);
  for (int c = 0; c < p.coarse->columns(); ++c)
    for (int f : p.nesting.cells_of[c])
      out.segment(Eigen::Index(c) * levels, levels) += fine_values.segment(Eigen::Index(f) * levels, levels);
  return out;
}

Eigen::VectorXd sum_columns(const ExtrudedMesh& mesh, const Eigen::VectorXd& values, int levels) {
  if (values.size() != Eigen::Index(mesh.columns()) * levels)
    throw LayoutError("sum_columns: value count does not match the mesh");
  return Eigen::Map<const Eigen::MatrixXd>(values.data(), levels, mesh.columns()).colwise().sum().transpose();
}

}  // namespace nestfield
