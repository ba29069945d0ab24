#pragma once

#include "nestfield/mesh.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nestfield {

/// Function-space layouts of the staggered discretisation.
enum class Space {
  Vu,          // normal flux component, one DoF per face
  Vtheta,      // top/bottom face centres, Nk+1 per column
  Vrho,        // cell centres, Nk per column
  VrhoShifted  // cell centres of the vertically-shifted mesh, Nk+1 per column
};

std::string_view to_string(Space s);
Space space_from_string(std::string_view name);
Eigen::Index dof_count(const ExtrudedMesh& mesh, Space s);

/// Thrown when fields of incompatible spaces or meshes are combined.
class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// DoF array tagged with its space and mesh. Value semantics; the mesh is shared.
class Field {
 public:
  Field(Space space, MeshHandle mesh);
  Field(Space space, MeshHandle mesh, Eigen::VectorXd values);

  static Field constant(Space space, MeshHandle mesh, double value);
  static Field zero(Space space, MeshHandle mesh) { return constant(space, std::move(mesh), 0.0); }

  Space space() const { return space_; }
  const ExtrudedMesh& mesh() const { return *mesh_; }
  const MeshHandle& mesh_handle() const { return mesh_; }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double& operator[](Eigen::Index i) { return values_[i]; }
  double operator[](Eigen::Index i) const { return values_[i]; }

  bool same_layout(const Field& other) const {
    return space_ == other.space_ && mesh_ == other.mesh_;
  }
  bool all_finite() const { return values_.allFinite(); }

 private:
  Space space_;
  MeshHandle mesh_;
  Eigen::VectorXd values_;
};

void require_layout(const Field& f, Space space, const char* where);
void require_same_layout(const Field& a, const Field& b, const char* where);
void require_mesh(const Field& f, const MeshHandle& mesh, const char* where);

Field add(const Field& a, const Field& b);
Field sub(const Field& a, const Field& b);
Field scale(double alpha, const Field& a);
Field pointwise_mul(const Field& a, const Field& b);
/// Throws std::domain_error where |b| <= 1e-300.
Field pointwise_div(const Field& a, const Field& b);

inline Field operator+(const Field& a, const Field& b) { return add(a, b); }
inline Field operator-(const Field& a, const Field& b) { return sub(a, b); }
inline Field operator*(double alpha, const Field& a) { return scale(alpha, a); }

/// Sum of rho * V over the cells of a Vrho or VrhoShifted field's own mesh.
double total_mass(const Field& density);

/// Per-cell masses rho * V in the field's DoF order.
Eigen::VectorXd cell_masses(const Field& density);

/// ASCII dump: header "<space> <nx> <ny> <Nk>" then one value per line in DoF order.
void write_field(std::ostream& os, const Field& f);

struct FieldDump {
  Space space;
  int nx = 0;
  int ny = 0;
  int layers = 0;
  Eigen::VectorXd values;
};

FieldDump read_field(std::istream& is);
/// Rebuilds a Field from a dump, checking it matches the mesh.
Field field_from_dump(const FieldDump& dump, MeshHandle mesh);

/// Factor lambda in [0, 1], one value per coarse cell and Vtheta level.
struct PositivityFactor {
  Field lambda;

  explicit PositivityFactor(Field values);
};

}  // namespace nestfield
