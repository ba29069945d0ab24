#include "nestfield/fields.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace nestfield {

std::string_view to_string(Space s) {
  switch (s) {
    case Space::Vu: return "Vu";
    case Space::Vtheta: return "Vtheta";
    case Space::Vrho: return "Vrho";
    case Space::VrhoShifted: return "VrhoShifted";
  }
  return "?";
}

Space space_from_string(std::string_view name) {
  if (name == "Vu") return Space::Vu;
  if (name == "Vtheta") return Space::Vtheta;
  if (name == "Vrho") return Space::Vrho;
  if (name == "VrhoShifted") return Space::VrhoShifted;
  throw std::invalid_argument("unknown space '" + std::string(name) + "'");
}

Eigen::Index dof_count(const ExtrudedMesh& mesh, Space s) {
  switch (s) {
    case Space::Vu: return mesh.face_count();
    case Space::Vrho: return mesh.cell_count();
    case Space::Vtheta:
    case Space::VrhoShifted: return mesh.level_count();
  }
  return 0;
}

Field::Field(Space space, MeshHandle mesh) : space_(space), mesh_(std::move(mesh)) {
  if (!mesh_) throw std::invalid_argument("Field: null mesh");
  values_ = Eigen::VectorXd::Zero(dof_count(*mesh_, space_));
}

Field::Field(Space space, MeshHandle mesh, Eigen::VectorXd values)
    : space_(space), mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw std::invalid_argument("Field: null mesh");
  if (values_.size() != dof_count(*mesh_, space_))
    throw LayoutError("Field: value count does not match the " + std::string(to_string(space_)) +
                      " DoF count");
}

Field Field::constant(Space space, MeshHandle mesh, double value) {
  Field f(space, std::move(mesh));
  f.values_.setConstant(value);
  return f;
}

void require_layout(const Field& f, Space space, const char* where) {
  if (f.space() != space)
    throw LayoutError(std::string(where) + ": expected a " + std::string(to_string(space)) +
                      " field, got " + std::string(to_string(f.space())));
}

void require_same_layout(const Field& a, const Field& b, const char* where) {
  if (!a.same_layout(b)) throw LayoutError(std::string(where) + ": layout mismatch");
}

void require_mesh(const Field& f, const MeshHandle& mesh, const char* where) {
  if (f.mesh_handle() != mesh) throw LayoutError(std::string(where) + ": field is on the wrong mesh");
}

Field add(const Field& a, const Field& b) {
  require_same_layout(a, b, "add");
  return Field(a.space(), a.mesh_handle(), a.values() + b.values());
}

Field sub(const Field& a, const Field& b) {
  require_same_layout(a, b, "sub");
  return Field(a.space(), a.mesh_handle(), a.values() - b.values());
}

Field scale(double alpha, const Field& a) {
  return Field(a.space(), a.mesh_handle(), alpha * a.values());
}

Field pointwise_mul(const Field& a, const Field& b) {
  require_same_layout(a, b, "pointwise_mul");
  return Field(a.space(), a.mesh_handle(), a.values().cwiseProduct(b.values()));
}

Field pointwise_div(const Field& a, const Field& b) {
  require_same_layout(a, b, "pointwise_div");
  if ((b.values().array().abs() <= 1e-300).any())
    throw std::domain_error("pointwise_div: denominator is zero");
  return Field(a.space(), a.mesh_handle(), a.values().cwiseQuotient(b.values()));
}

Eigen::VectorXd cell_masses(const Field& density) {
  switch (density.space()) {
    case Space::Vrho: return density.values().cwiseProduct(density.mesh().cell_volumes());
    case Space::VrhoShifted:
      return density.values().cwiseProduct(density.mesh().shifted_volumes());
    default:
      throw LayoutError("cell_masses: density must be a Vrho or VrhoShifted field");
  }
}

double total_mass(const Field& density) { return cell_masses(density).sum(); }

void write_field(std::ostream& os, const Field& f) {
  os << to_string(f.space()) << ' ' << f.mesh().nx() << ' ' << f.mesh().ny() << ' '
     << f.mesh().layers() << '\n';
  const auto old = os.precision(17);
  for (double v : f.values()) os << v << '\n';
  os.precision(old);
}

FieldDump read_field(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("read_field: missing header");
  std::istringstream hs(header);
  std::string space;
  FieldDump d{};
  if (!(hs >> space >> d.nx >> d.ny >> d.layers))
    throw std::runtime_error("read_field: malformed header '" + header + "'");
  d.space = space_from_string(space);
  std::vector<double> vals;
  double v;
  while (is >> v) vals.push_back(v);
  d.values = Eigen::Map<Eigen::VectorXd>(vals.data(), Eigen::Index(vals.size()));
  return d;
}

Field field_from_dump(const FieldDump& dump, MeshHandle mesh) {
  if (dump.nx != mesh->nx() || dump.ny != mesh->ny() || dump.layers != mesh->layers())
    throw LayoutError("field_from_dump: dump does not match the mesh");
  return Field(dump.space, std::move(mesh), dump.values);
}

PositivityFactor::PositivityFactor(Field values) : lambda(std::move(values)) {
  require_layout(lambda, Space::Vtheta, "PositivityFactor");
  if ((lambda.values().array() < 0.0).any() || (lambda.values().array() > 1.0).any())
    throw std::domain_error("PositivityFactor: values must lie in [0, 1]");
}

}  // namespace nestfield
