#include "nestfield/mesh.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace nestfield {

VerticalGrid VerticalGrid::uniform(int layers, double z_top) {
  if (layers < 1) throw std::invalid_argument("VerticalGrid: need at least one layer");
  VerticalGrid g;
  g.z_levels.resize(layers + 1);
  for (int k = 0; k <= layers; ++k) g.z_levels[k] = z_top * k / layers;
  g.z_levels.back() = z_top;
  return g;
}

Orography Orography::flat(const HorizontalMesh& fine) {
  return Orography{Eigen::VectorXd::Zero(fine.columns())};
}

Orography Orography::sampled(const HorizontalMesh& fine,
                             const std::function<double(double, double)>& h) {
  Orography o{Eigen::VectorXd(fine.columns())};
  for (int j = 0; j < fine.ny; ++j)
    for (int i = 0; i < fine.nx; ++i) o.surface_height[fine.column(i, j)] = h(i * fine.dx(), j * fine.dy());
  return o;
}

double column_slab_volume(double dx, double dy, const Eigen::Vector4d& bottom,
                          const Eigen::Vector4d& top) {
  // The thickness is bilinear over the base, so its mean is the corner mean.
  return dx * dy * 0.25 * (top - bottom).sum();
}

namespace {

// Antiderivative of sqrt(1 + p^2 + q^2) in both p and q.
double patch_antiderivative(double p, double q) {
  const double s = std::sqrt(1.0 + p * p + q * q);
  return (2.0 * p * q * s + (p * p * p + 3.0 * p) * std::log(q + s) +
          (q * q * q + 3.0 * q) * std::log(p + s) - 2.0 * std::atan(p * q / s)) /
         6.0;
}

constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

}  // namespace

double bilinear_patch_area(double dx, double dy, const Eigen::Vector4d& z) {
  const double a = (z[1] - z[0]) / dx;
  const double b = (z[2] - z[0]) / dy;
  const double c = (z[3] - z[1] - z[2] + z[0]) / (dx * dy);
  if (std::abs(c * dx) < 0.05 && std::abs(c * dy) < 0.05) {
    // Nearly planar: the closed form loses digits to cancellation, while the
    // integrand is close to a low-order polynomial and Gauss-Legendre is exact
    // to round-off.
    double sum = 0.0;
    for (int s = 0; s < 8; ++s) {
      const double x = 0.5 * dx * (1.0 + kGaussNodes[s]);
      for (int t = 0; t < 8; ++t) {
        const double y = 0.5 * dy * (1.0 + kGaussNodes[t]);
        const double zx = a + c * y;
        const double zy = b + c * x;
        sum += kGaussWeights[s] * kGaussWeights[t] * std::sqrt(1.0 + zx * zx + zy * zy);
      }
    }
    return 0.25 * dx * dy * sum;
  }
  const double p0 = a, p1 = a + c * dy;
  const double q0 = b, q1 = b + c * dx;
  const double integral = patch_antiderivative(p1, q1) - patch_antiderivative(p0, q1) -
                          patch_antiderivative(p1, q0) + patch_antiderivative(p0, q0);
  return integral / (c * c);
}

Eigen::Index ExtrudedMesh::face_dof(FaceDir dir, int column, int k) const {
  switch (dir) {
    case FaceDir::x: return cell_dof(column, k);
    case FaceDir::y: return cell_count() + cell_dof(column, k);
    case FaceDir::z: return 2 * cell_count() + level_dof(column, k);
  }
  return -1;
}

Eigen::Index ExtrudedMesh::face_dof(const FaceIndex& f) const {
  return face_dof(f.dir, horizontal_.column(f.i, f.j), f.k);
}

namespace {

Eigen::Vector4d corner_heights(const Eigen::MatrixXd& z, const HorizontalMesh& h, int i, int j,
                               int k) {
  return {z(k, h.column(i, j)), z(k, h.column(i + 1, j)), z(k, h.column(i, j + 1)),
          z(k, h.column(i + 1, j + 1))};
}

Eigen::VectorXd slab_volumes(const Eigen::MatrixXd& z, const HorizontalMesh& h) {
  const int nlayers = static_cast<int>(z.rows()) - 1;
  Eigen::VectorXd v(Eigen::Index(h.columns()) * nlayers);
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i) {
      const int c = h.column(i, j);
      for (int k = 0; k < nlayers; ++k)
        v[Eigen::Index(c) * nlayers + k] = column_slab_volume(
            h.dx(), h.dy(), corner_heights(z, h, i, j, k), corner_heights(z, h, i, j, k + 1));
    }
  return v;
}

}  // namespace

ExtrudedMesh::ExtrudedMesh(HorizontalMesh horizontal, VerticalGrid vertical,
                           Eigen::MatrixXd heights)
    : horizontal_(horizontal), vertical_(std::move(vertical)), vertex_z_(std::move(heights)) {
  if (horizontal_.nx < 1 || horizontal_.ny < 1)
    throw std::invalid_argument("ExtrudedMesh: cell counts must be positive");
  if (!(horizontal_.Lx > 0.0) || !(horizontal_.Ly > 0.0))
    throw std::invalid_argument("ExtrudedMesh: domain extents must be positive");
  const int nk = vertical_.layers();
  if (nk < 1) throw std::invalid_argument("ExtrudedMesh: need at least one layer");
  if (vertex_z_.rows() != nk + 1 || vertex_z_.cols() != horizontal_.columns())
    throw std::invalid_argument("ExtrudedMesh: vertex height array has the wrong shape");
  for (int k = 0; k < nk; ++k)
    if (!(vertical_.z_levels[k + 1] > vertical_.z_levels[k]))
      throw std::invalid_argument("ExtrudedMesh: interface heights must increase strictly");
  for (Eigen::Index c = 0; c < vertex_z_.cols(); ++c)
    for (int k = 0; k < nk; ++k)
      if (!(vertex_z_(k + 1, c) > vertex_z_(k, c)))
        throw std::invalid_argument("ExtrudedMesh: vertex heights must increase in each column");

  const HorizontalMesh& h = horizontal_;
  cell_volume_ = slab_volumes(vertex_z_, h);

  face_area_.resize(face_count());
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i) {
      const int c = h.column(i, j);
      for (int k = 0; k < nk; ++k) {
        // East face spans vertices (i+1, j) and (i+1, j+1); north face spans
        // (i, j+1) and (i+1, j+1). Both are vertical trapezoids.
        const double te = (vertex_z(i + 1, j, k + 1) - vertex_z(i + 1, j, k)) +
                          (vertex_z(i + 1, j + 1, k + 1) - vertex_z(i + 1, j + 1, k));
        const double tn = (vertex_z(i, j + 1, k + 1) - vertex_z(i, j + 1, k)) +
                          (vertex_z(i + 1, j + 1, k + 1) - vertex_z(i + 1, j + 1, k));
        face_area_[face_dof(FaceDir::x, c, k)] = 0.5 * h.dy() * te;
        face_area_[face_dof(FaceDir::y, c, k)] = 0.5 * h.dx() * tn;
      }
      for (int k = 0; k <= nk; ++k)
        face_area_[face_dof(FaceDir::z, c, k)] =
            bilinear_patch_area(h.dx(), h.dy(), corner_heights(vertex_z_, h, i, j, k));
    }

  ShiftedGeometry shifted = shifted_geometry(*this);
  shifted_z_ = std::move(shifted.interface_heights);
  shifted_volume_ = std::move(shifted.volumes);

  for (double v : cell_volume_)
    if (!(v > 0.0)) throw std::invalid_argument("ExtrudedMesh: non-positive cell volume");
  for (double a : face_area_)
    if (!(a > 0.0)) throw std::invalid_argument("ExtrudedMesh: non-positive face area");
}

ShiftedGeometry shifted_geometry(const ExtrudedMesh& mesh) {
  const int nk = mesh.layers();
  const Eigen::MatrixXd& z = mesh.vertex_heights();
  ShiftedGeometry g;
  g.interface_heights.resize(nk + 2, z.cols());
  g.interface_heights.row(0) = z.row(0);
  for (int k = 0; k < nk; ++k) g.interface_heights.row(k + 1) = 0.5 * (z.row(k) + z.row(k + 1));
  g.interface_heights.row(nk + 1) = z.row(nk);
  g.volumes = slab_volumes(g.interface_heights, mesh.horizontal());
  return g;
}

double cell_volume(const ExtrudedMesh& mesh, const CellIndex& cell) {
  if (cell.i < 0 || cell.i >= mesh.nx() || cell.j < 0 || cell.j >= mesh.ny() || cell.k < 0 ||
      cell.k >= mesh.layers())
    throw std::out_of_range("cell_volume: cell index out of range");
  return mesh.cell_volumes()[mesh.cell_dof(mesh.horizontal().column(cell.i, cell.j), cell.k)];
}

double face_area(const ExtrudedMesh& mesh, const FaceIndex& face) {
  const int kmax = face.dir == FaceDir::z ? mesh.layers() : mesh.layers() - 1;
  if (face.i < 0 || face.i >= mesh.nx() || face.j < 0 || face.j >= mesh.ny() || face.k < 0 ||
      face.k > kmax)
    throw std::out_of_range("face_area: face index out of range");
  return mesh.face_areas()[mesh.face_dof(face)];
}

NestedMeshPair build_nested_pair(const HorizontalMesh& fine, const VerticalGrid& vertical,
                                 int ratio, const Orography& orography) {
  if (fine.nx < 1 || fine.ny < 1) throw std::invalid_argument("build_nested_pair: zero cell count");
  if (ratio < 2) throw std::invalid_argument("build_nested_pair: refinement factor must be >= 2");
  if (fine.nx % ratio != 0 || fine.ny % ratio != 0)
    throw std::invalid_argument("build_nested_pair: refinement factor " + std::to_string(ratio) +
                                " does not divide the fine cell counts");
  if (vertical.layers() < 1) throw std::invalid_argument("build_nested_pair: no layers");
  if (orography.surface_height.size() != fine.columns())
    throw std::invalid_argument("build_nested_pair: orography needs one value per fine column");
  const double z_top = vertical.z_top();
  for (double h : orography.surface_height)
    if (!(h >= 0.0 && h < z_top))
      throw std::domain_error("build_nested_pair: surface height must lie in [0, z_top)");

  const int nk = vertical.layers();
  HorizontalMesh fh = fine;
  fh.level = 0;
  Eigen::MatrixXd fz(nk + 1, fh.columns());
  for (int c = 0; c < fh.columns(); ++c) {
    const double h = orography.surface_height[c];
    for (int k = 0; k <= nk; ++k) {
      const double zhat = vertical.z_levels[k];
      fz(k, c) = zhat + h * (1.0 - zhat / z_top);
    }
  }

  HorizontalMesh ch{fine.nx / ratio, fine.ny / ratio, fine.Lx, fine.Ly, 1};
  Eigen::MatrixXd cz(nk + 1, ch.columns());
  for (int J = 0; J < ch.ny; ++J)
    for (int I = 0; I < ch.nx; ++I) cz.col(ch.column(I, J)) = fz.col(fh.column(ratio * I, ratio * J));

  NestedMeshPair pair;
  pair.fine = std::make_shared<const ExtrudedMesh>(fh, vertical, std::move(fz));
  pair.coarse = std::make_shared<const ExtrudedMesh>(ch, vertical, std::move(cz));

  NestingMap& nm = pair.nesting;
  nm.ratio = ratio;
  nm.cells_of.assign(ch.columns(), {});
  nm.parent.assign(fh.columns(), -1);
  for (int J = 0; J < ch.ny; ++J)
    for (int I = 0; I < ch.nx; ++I) {
      auto& kids = nm.cells_of[ch.column(I, J)];
      for (int b = 0; b < ratio; ++b)
        for (int a = 0; a < ratio; ++a) {
          const int f = fh.column(ratio * I + a, ratio * J + b);
          kids.push_back(f);
          nm.parent[f] = ch.column(I, J);
        }
    }

  const ExtrudedMesh& fm = *pair.fine;
  const ExtrudedMesh& cm = *pair.coarse;
  nm.faces_of.assign(cm.face_count(), {});
  nm.face_parent.assign(fm.face_count(), -1);
  for (int j = 0; j < fh.ny; ++j)
    for (int i = 0; i < fh.nx; ++i) {
      const int fc = fh.column(i, j);
      const int pc = nm.parent[fc];
      for (int k = 0; k < nk; ++k) {
        const Eigen::Index fx = fm.face_dof(FaceDir::x, fc, k);
        if ((i + 1) % ratio == 0) {
          nm.face_parent[fx] = cm.face_dof(FaceDir::x, pc, k);
          nm.faces_of[nm.face_parent[fx]].push_back(fx);
        } else {
          nm.interior_faces.push_back(fx);
        }
        const Eigen::Index fy = fm.face_dof(FaceDir::y, fc, k);
        if ((j + 1) % ratio == 0) {
          nm.face_parent[fy] = cm.face_dof(FaceDir::y, pc, k);
          nm.faces_of[nm.face_parent[fy]].push_back(fy);
        } else {
          nm.interior_faces.push_back(fy);
        }
      }
      for (int k = 0; k <= nk; ++k) {
        const Eigen::Index fzd = fm.face_dof(FaceDir::z, fc, k);
        nm.face_parent[fzd] = cm.face_dof(FaceDir::z, pc, k);
        nm.faces_of[nm.face_parent[fzd]].push_back(fzd);
      }
    }
  return pair;
}

void write_mesh_dump(std::ostream& os, const ExtrudedMesh& mesh) {
  const auto old = os.precision(17);
  for (int j = 0; j < mesh.ny(); ++j)
    for (int i = 0; i < mesh.nx(); ++i)
      for (int k = 0; k < mesh.layers(); ++k)
        os << i << ',' << j << ',' << k << ','
           << mesh.cell_volumes()[mesh.cell_dof(mesh.horizontal().column(i, j), k)] << '\n';
  os.precision(old);
}

}  // namespace nestfield
