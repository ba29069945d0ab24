#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace nestfield {

/// Periodic index wrap into [0, n).
inline int wrap(int i, int n) { return ((i % n) + n) % n; }

/// Uniform doubly-periodic quadrilateral mesh of nx x ny columns.
struct HorizontalMesh {
  int nx = 0;
  int ny = 0;
  double Lx = 1.0;
  double Ly = 1.0;
  int level = 0;  // 0 for the finest mesh of a pair, 1 for its coarse partner

  double dx() const { return Lx / nx; }
  double dy() const { return Ly / ny; }
  int columns() const { return nx * ny; }
  /// Column index, i fastest, with periodic wrap.
  int column(int i, int j) const { return wrap(i, nx) + nx * wrap(j, ny); }
  double centre_x(int i) const { return (i + 0.5) * dx(); }
  double centre_y(int j) const { return (j + 0.5) * dy(); }
};

/// Flat-domain interface heights shared by every mesh of a pair.
struct VerticalGrid {
  std::vector<double> z_levels;  // length Nk+1, z_levels[0] = 0

  int layers() const { return static_cast<int>(z_levels.size()) - 1; }
  double z_top() const { return z_levels.back(); }

  static VerticalGrid uniform(int layers, double z_top);
};

/// Surface height h sampled at the fine-mesh vertices. Vertex (i, j) is the
/// south-west corner of column (i, j), so there is one value per fine column.
struct Orography {
  Eigen::VectorXd surface_height;

  static Orography flat(const HorizontalMesh& fine);
  static Orography sampled(const HorizontalMesh& fine,
                           const std::function<double(double x, double y)>& h);
};

struct CellIndex {
  int i = 0;
  int j = 0;
  int k = 0;
};

enum class FaceDir { x, y, z };

/// Face (i, j, k): for x the east face of cell (i, j, k), for y its north
/// face, for z the interface k (0 = ground, Nk = model top) of column (i, j).
struct FaceIndex {
  FaceDir dir = FaceDir::x;
  int i = 0;
  int j = 0;
  int k = 0;
};

/// Hexahedral extruded mesh with vertical lateral edges. Geometry is computed
/// once at construction and the object is immutable afterwards.
///
/// DoF ordering used throughout the library:
///   cells          column * Nk + k
///   Vtheta/shifted column * (Nk + 1) + k
///   faces          [x block: column*Nk + k][y block: same][z block: column*(Nk+1) + k]
class ExtrudedMesh {
 public:
  ExtrudedMesh(HorizontalMesh horizontal, VerticalGrid vertical, Eigen::MatrixXd vertex_z);

  const HorizontalMesh& horizontal() const { return horizontal_; }
  const VerticalGrid& vertical() const { return vertical_; }
  int nx() const { return horizontal_.nx; }
  int ny() const { return horizontal_.ny; }
  int layers() const { return vertical_.layers(); }
  int columns() const { return horizontal_.columns(); }

  Eigen::Index cell_count() const { return Eigen::Index(columns()) * layers(); }
  Eigen::Index level_count() const { return Eigen::Index(columns()) * (layers() + 1); }
  Eigen::Index face_count() const { return 2 * cell_count() + level_count(); }

  Eigen::Index cell_dof(int column, int k) const { return Eigen::Index(column) * layers() + k; }
  Eigen::Index level_dof(int column, int k) const {
    return Eigen::Index(column) * (layers() + 1) + k;
  }
  Eigen::Index face_dof(FaceDir dir, int column, int k) const;
  Eigen::Index face_dof(const FaceIndex& f) const;

  /// Vertex height; (i, j) wraps periodically, k in [0, Nk].
  double vertex_z(int i, int j, int k) const {
    return vertex_z_(k, horizontal_.column(i, j));
  }
  const Eigen::MatrixXd& vertex_heights() const { return vertex_z_; }

  const Eigen::VectorXd& cell_volumes() const { return cell_volume_; }
  const Eigen::VectorXd& face_areas() const { return face_area_; }
  /// Volumes of the vertically-shifted twin, Nk+1 layers per column.
  const Eigen::VectorXd& shifted_volumes() const { return shifted_volume_; }
  /// Interface heights of the shifted twin, (Nk+2) x columns.
  const Eigen::MatrixXd& shifted_vertex_heights() const { return shifted_z_; }

 private:
  HorizontalMesh horizontal_;
  VerticalGrid vertical_;
  Eigen::MatrixXd vertex_z_;  // (Nk+1) x columns
  Eigen::MatrixXd shifted_z_;
  Eigen::VectorXd cell_volume_;
  Eigen::VectorXd face_area_;
  Eigen::VectorXd shifted_volume_;
};

using MeshHandle = std::shared_ptr<const ExtrudedMesh>;

double cell_volume(const ExtrudedMesh& mesh, const CellIndex& cell);
double face_area(const ExtrudedMesh& mesh, const FaceIndex& face);

/// Volume of the hexahedron over a dx*dy rectangle bounded by two bilinear
/// surfaces given by their corner heights (sw, se, nw, ne).
double column_slab_volume(double dx, double dy, const Eigen::Vector4d& bottom,
                          const Eigen::Vector4d& top);

/// Area of the bilinear surface z(x, y) over a dx*dy rectangle given corner
/// heights (sw, se, nw, ne).
double bilinear_patch_area(double dx, double dy, const Eigen::Vector4d& z);

struct ShiftedGeometry {
  Eigen::MatrixXd interface_heights;  // (Nk+2) x columns
  Eigen::VectorXd volumes;            // columns * (Nk+1)
};

/// Geometry of the vertically-shifted twin: interfaces at the mid-heights of
/// the primary cells, with the bottom and top surfaces shared.
ShiftedGeometry shifted_geometry(const ExtrudedMesh& mesh);

/// Cell and face nesting between a fine mesh and its coarse partner.
struct NestingMap {
  int ratio = 0;
  /// Coarse column -> its ratio^2 fine columns; the same list applies at every level.
  std::vector<std::vector<int>> cells_of;
  /// Fine column -> parent coarse column.
  std::vector<int> parent;
  /// Coarse face dof -> coincident fine face dofs (exterior faces).
  std::vector<std::vector<Eigen::Index>> faces_of;
  /// Fine face dof -> coarse face dof, or -1 for faces interior to a coarse cell.
  std::vector<Eigen::Index> face_parent;
  /// Fine lateral face dofs strictly inside a coarse cell.
  std::vector<Eigen::Index> interior_faces;

  int children_per_cell() const { return ratio * ratio; }
};

struct NestedMeshPair {
  MeshHandle fine;
  MeshHandle coarse;
  NestingMap nesting;

  int ratio() const { return nesting.ratio; }
};

/// Builds both meshes of a pair. Terrain following uses
/// z = zhat + h (1 - zhat / z_top) on the fine vertices; coarse vertex
/// heights are copied from the coincident fine vertices.
NestedMeshPair build_nested_pair(const HorizontalMesh& fine, const VerticalGrid& vertical,
                                 int ratio, const Orography& orography);

/// One record per cell: i,j,k,V.
void write_mesh_dump(std::ostream& os, const ExtrudedMesh& mesh);

}  // namespace nestfield
