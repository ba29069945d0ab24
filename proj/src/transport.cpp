#include "nestfield/transport.hpp"

#include "nestfield/moisture.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace nestfield {

FluxScheme flux_scheme_from_string(std::string_view name) {
  if (name == "upwind1") return FluxScheme::upwind1;
  if (name == "linear-upwind2" || name == "linear_upwind2") return FluxScheme::linear_upwind2;
  throw std::invalid_argument("unknown flux scheme '" + std::string(name) + "'");
}

std::string_view to_string(FluxScheme s) {
  return s == FluxScheme::upwind1 ? "upwind1" : "linear-upwind2";
}

Field divergence(const Field& flux) {
  require_layout(flux, Space::Vu, "divergence");
  const ExtrudedMesh& m = flux.mesh();
  const HorizontalMesh& h = m.horizontal();
  const Eigen::VectorXd& a = m.face_areas();
  const Eigen::VectorXd& vol = m.cell_volumes();
  Field out(Space::Vrho, flux.mesh_handle());
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i) {
      const int c = h.column(i, j);
      const int west = h.column(i - 1, j);
      const int south = h.column(i, j - 1);
      for (int k = 0; k < m.layers(); ++k) {
        auto net = [&](Eigen::Index d) { return flux[d] * a[d]; };
        const double outflow = net(m.face_dof(FaceDir::x, c, k)) - net(m.face_dof(FaceDir::x, west, k)) +
                               net(m.face_dof(FaceDir::y, c, k)) - net(m.face_dof(FaceDir::y, south, k)) +
                               net(m.face_dof(FaceDir::z, c, k + 1)) - net(m.face_dof(FaceDir::z, c, k));
        const Eigen::Index d = m.cell_dof(c, k);
        out[d] = outflow / vol[d];
      }
    }
  return out;
}

namespace {

// Value on the face between `lo` (upstream when the flux is positive) and
// `hi`, given the next cells beyond each of them.
double face_value(double lower2, double lo, double hi, double upper2, double flux, FluxScheme s) {
  if (s == FluxScheme::upwind1) return flux >= 0.0 ? lo : hi;
  return flux >= 0.0 ? lo + 0.25 * (hi - lower2) : hi - 0.25 * (upper2 - lo);
}

}  // namespace

Field flux_operator(const Field& mixing_ratio, const Field& mass_flux, FluxScheme scheme) {
  require_layout(mixing_ratio, Space::Vrho, "flux_operator");
  require_layout(mass_flux, Space::Vu, "flux_operator");
  if (mixing_ratio.mesh_handle() != mass_flux.mesh_handle())
    throw LayoutError("flux_operator: fields are on different meshes");
  const ExtrudedMesh& m = mixing_ratio.mesh();
  const HorizontalMesh& h = m.horizontal();
  const int nk = m.layers();
  Field out(Space::Vu, mass_flux.mesh_handle());
  auto a = [&](int i, int j, int k) { return mixing_ratio[m.cell_dof(h.column(i, j), k)]; };
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i) {
      const int c = h.column(i, j);
      for (int k = 0; k < nk; ++k) {
        const Eigen::Index fx = m.face_dof(FaceDir::x, c, k);
        out[fx] = mass_flux[fx] *
                  face_value(a(i - 1, j, k), a(i, j, k), a(i + 1, j, k), a(i + 2, j, k), mass_flux[fx], scheme);
        const Eigen::Index fy = m.face_dof(FaceDir::y, c, k);
        out[fy] = mass_flux[fy] *
                  face_value(a(i, j - 1, k), a(i, j, k), a(i, j + 1, k), a(i, j + 2, k), mass_flux[fy], scheme);
      }
      for (int k = 0; k <= nk; ++k) {
        const Eigen::Index fz = m.face_dof(FaceDir::z, c, k);
        const double below = a(i, j, std::max(k - 1, 0));
        const double above = a(i, j, std::min(k, nk - 1));
        out[fz] = mass_flux[fz] * (mass_flux[fz] >= 0.0 ? below : above);
      }
    }
  return out;
}

Field sample_wind(const MeshHandle& mesh, const PrescribedWind& wind, double t) {
  const ExtrudedMesh& m = *mesh;
  const HorizontalMesh& h = m.horizontal();
  Field out(Space::Vu, mesh);
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i) {
      const int c = h.column(i, j);
      const double ux = wind.u((i + 1) * h.dx(), h.centre_y(j), t);
      const double vy = wind.v(h.centre_x(i), (j + 1) * h.dy(), t);
      for (int k = 0; k < m.layers(); ++k) {
        out[m.face_dof(FaceDir::x, c, k)] = ux;
        out[m.face_dof(FaceDir::y, c, k)] = vy;
      }
    }
  return out;
}

double courant_number(const Field& wind, double dt) {
  require_layout(wind, Space::Vu, "courant_number");
  const ExtrudedMesh& m = wind.mesh();
  const Eigen::Index n = m.cell_count();
  const double cx = n ? wind.values().head(n).cwiseAbs().maxCoeff() * dt / m.horizontal().dx() : 0.0;
  const double cy = n ? wind.values().segment(n, n).cwiseAbs().maxCoeff() * dt / m.horizontal().dy() : 0.0;
  return std::max(cx, cy);
}

TransportState make_transport_state(const Remapper& remap, Field rho_dry,
                                    std::vector<Field> mixing_ratio, double dt) {
  require_mesh(rho_dry, remap.fine(), "make_transport_state");
  require_layout(rho_dry, Space::Vrho, "make_transport_state");
  if (!(rho_dry.values().array() > 0.0).all())
    throw std::domain_error("make_transport_state: dry density must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("make_transport_state: dt must be positive");
  const Field coarse_rho = remap.restrict_density(rho_dry);
  TransportState s{rho_dry, Field::zero(Space::Vu, remap.fine()), Field::zero(Space::Vu, remap.fine()),
                   {}, {}, 0.0, dt};
  for (Field& a : mixing_ratio) {
    require_mesh(a, remap.coarse(), "make_transport_state");
    require_layout(a, Space::Vrho, "make_transport_state");
    s.tracer_density.push_back(pointwise_mul(a, coarse_rho));
    s.mixing_ratio.push_back(std::move(a));
  }
  return s;
}

void step_dry_density(TransportState& state, const PrescribedWind& wind, const FluxOperatorConfig& cfg) {
  if (cfg.substeps < 1) throw std::invalid_argument("step_dry_density: substeps must be >= 1");
  const MeshHandle& mesh = state.rho_dry.mesh_handle();
  const double h = state.dt / cfg.substeps;
  auto checked_wind = [&](double t) {
    Field u = sample_wind(mesh, wind, t);
    const double courant = courant_number(u, state.dt);
    if (courant > cfg.substeps)
      throw CflError("Courant number " + std::to_string(courant) + " exceeds the " +
                     std::to_string(cfg.substeps) + " substep(s) allowed");
    return u;
  };

  Field rho = state.rho_dry;
  Field flux_sum = Field::zero(Space::Vu, mesh);
  Field wind_sum = Field::zero(Space::Vu, mesh);
  for (int s = 0; s < cfg.substeps; ++s) {
    const double t0 = state.t + s * h;
    const Field u0 = checked_wind(t0);
    const Field f0 = flux_operator(rho, u0, cfg.scheme);
    const Field rho1 = rho - h * divergence(f0);
    const Field u1 = checked_wind(t0 + h);
    const Field f1 = flux_operator(rho1, u1, cfg.scheme);
    const Field stage_flux = 0.5 * (f0 + f1);
    rho = rho - h * divergence(stage_flux);
    flux_sum = flux_sum + stage_flux;
    wind_sum = wind_sum + 0.5 * (u0 + u1);
  }
  state.mass_flux = (1.0 / cfg.substeps) * flux_sum;
  state.mean_wind = (1.0 / cfg.substeps) * wind_sum;
  // One update with the mean flux: identical to the staged result in exact
  // arithmetic, and exactly the flux that is restricted to the coarse mesh.
  state.rho_dry = state.rho_dry - state.dt * divergence(state.mass_flux);
  state.t += state.dt;
}

namespace {

Field restricted_dry_density(const TransportState& state, const Remapper& remap) {
  Field rho = remap.restrict_density(state.rho_dry);
  if (!(rho.values().array() > 0.0).all())
    throw std::domain_error("coarse dry density is not positive");
  return rho;
}

}  // namespace

void step_coarse_tracer(TransportState& state, const Remapper& remap, FluxScheme scheme) {
  const Field rho = restricted_dry_density(state, remap);
  const Field coarse_flux = remap.restrict_wind(state.mass_flux);
  const double dt = state.dt;
  for (std::size_t y = 0; y < state.mixing_ratio.size(); ++y) {
    const Field f1 = flux_operator(state.mixing_ratio[y], coarse_flux, scheme);
    const Field stage = pointwise_div(state.tracer_density[y] - dt * divergence(f1), rho);
    const Field f2 = flux_operator(stage, coarse_flux, scheme);
    state.tracer_density[y] = state.tracer_density[y] - dt * divergence(0.5 * (f1 + f2));
    state.mixing_ratio[y] = pointwise_div(state.tracer_density[y], rho);
  }
}

void step_coarse_tracer_advective(TransportState& state, const Remapper& remap, FluxScheme scheme) {
  const Field rho = restricted_dry_density(state, remap);
  const Field wind = remap.restrict_wind(state.mean_wind);
  const Field wind_div = divergence(wind);
  const double dt = state.dt;
  // da/dt = -(div(a u) - a div u)
  auto tendency = [&](const Field& a) {
    return pointwise_mul(a, wind_div) - divergence(flux_operator(a, wind, scheme));
  };
  for (std::size_t y = 0; y < state.mixing_ratio.size(); ++y) {
    const Field& a = state.mixing_ratio[y];
    const Field k1 = tendency(a);
    const Field k2 = tendency(a + dt * k1);
    state.mixing_ratio[y] = a + (0.5 * dt) * (k1 + k2);
    state.tracer_density[y] = pointwise_mul(state.mixing_ratio[y], rho);
  }
}

MeshHandle shifted_twin(const ExtrudedMesh& mesh) {
  const std::vector<double>& z = mesh.vertical().z_levels;
  VerticalGrid grid;
  grid.z_levels.push_back(z.front());
  for (std::size_t k = 0; k + 1 < z.size(); ++k) grid.z_levels.push_back(0.5 * (z[k] + z[k + 1]));
  grid.z_levels.push_back(z.back());
  return std::make_shared<const ExtrudedMesh>(mesh.horizontal(), grid, mesh.shifted_vertex_heights());
}

Field shift_flux(const Field& flux, const MeshHandle& twin) {
  require_layout(flux, Space::Vu, "shift_flux");
  const ExtrudedMesh& m = flux.mesh();
  const ExtrudedMesh& t = *twin;
  if (t.columns() != m.columns() || t.layers() != m.layers() + 1)
    throw LayoutError("shift_flux: mesh is not the shifted twin of the flux's mesh");
  const Eigen::VectorXd& a = m.face_areas();
  const Eigen::VectorXd& ta = t.face_areas();
  const int nk = m.layers();
  Field out(Space::Vu, twin);
  auto fa = [&](FaceDir d, int c, int k) {
    const Eigen::Index i = m.face_dof(d, c, k);
    return flux[i] * a[i];
  };
  for (int c = 0; c < m.columns(); ++c) {
    for (FaceDir d : {FaceDir::x, FaceDir::y})
      for (int k = 0; k <= nk; ++k) {
        const double below = k > 0 ? fa(d, c, k - 1) : 0.0;
        const double above = k < nk ? fa(d, c, k) : 0.0;
        const Eigen::Index i = t.face_dof(d, c, k);
        out[i] = 0.5 * (below + above) / ta[i];
      }
    // Ground and lid are shared; inner twin interfaces sit at primary cell centres.
    for (int k = 0; k <= nk + 1; ++k) {
      double v;
      if (k == 0) v = fa(FaceDir::z, c, 0);
      else if (k == nk + 1) v = fa(FaceDir::z, c, nk);
      else v = 0.5 * (fa(FaceDir::z, c, k - 1) + fa(FaceDir::z, c, k));
      const Eigen::Index i = t.face_dof(FaceDir::z, c, k);
      out[i] = v / ta[i];
    }
  }
  return out;
}

ShiftedTracerState make_shifted_tracer_state(const Remapper& remap, const Field& rho_dry,
                                             const std::vector<Field>& mixing_ratio) {
  require_mesh(rho_dry, remap.fine(), "make_shifted_tracer_state");
  ShiftedTracerState s{shifted_twin(*remap.coarse()), {}, {}};
  const Field rho(Space::Vrho, s.twin, shift_density(remap.restrict_density(rho_dry)).values());
  for (const Field& m : mixing_ratio) {
    require_mesh(m, remap.coarse(), "make_shifted_tracer_state");
    const Field a(Space::Vrho, s.twin, shift_mixing_ratio(m).values());
    s.tracer_density.push_back(pointwise_mul(a, rho));
    s.mixing_ratio.push_back(a);
  }
  return s;
}

void step_shifted_tracer(ShiftedTracerState& state, const TransportState& dry, const Remapper& remap,
                         FluxScheme scheme) {
  const Field coarse = restricted_dry_density(dry, remap);
  const Field rho(Space::Vrho, state.twin, shift_density(coarse).values());
  const Field flux = shift_flux(remap.restrict_wind(dry.mass_flux), state.twin);
  const double dt = dry.dt;
  for (std::size_t y = 0; y < state.mixing_ratio.size(); ++y) {
    const Field f1 = flux_operator(state.mixing_ratio[y], flux, scheme);
    const Field stage = pointwise_div(state.tracer_density[y] - dt * divergence(f1), rho);
    const Field f2 = flux_operator(stage, flux, scheme);
    state.tracer_density[y] = state.tracer_density[y] - dt * divergence(0.5 * (f1 + f2));
    state.mixing_ratio[y] = pointwise_div(state.tracer_density[y], rho);
  }
}

}  // namespace nestfield
