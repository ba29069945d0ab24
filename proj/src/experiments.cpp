#include "nestfield/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace nestfield {

void Diagnostics::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::logic_error("Diagnostics: row width mismatch");
  rows.push_back(std::move(row));
}

std::vector<double> Diagnostics::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) {
      std::vector<double> out;
      for (const auto& r : rows) out.push_back(r[c]);
      return out;
    }
  throw std::out_of_range("Diagnostics: no column '" + std::string(name) + "'");
}

void Diagnostics::write_csv(std::ostream& os) const {
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << '\n';
  char buf[32];
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", r[c]);
      os << (c ? "," : "") << buf;
    }
    os << '\n';
  }
}

std::string Diagnostics::csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

double periodic_offset(double a, double b, double L) {
  double d = std::fmod(a - b, L);
  if (d > 0.5 * L) d -= L;
  if (d < -0.5 * L) d += L;
  return d;
}

Orography bump_orography(const HorizontalMesh& fine, double height) {
  const double radius = 0.25 * fine.Lx;
  return Orography::sampled(fine, [=](double x, double y) {
    const double r = std::hypot(periodic_offset(x, 0.5 * fine.Lx, fine.Lx),
                                periodic_offset(y, 0.5 * fine.Ly, fine.Ly));
    if (r >= radius) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * r / radius);
    return height * c * c;
  });
}

NestedMeshPair build_pair(const ExperimentConfig& cfg) {
  HorizontalMesh fine{cfg.nx, cfg.ny, cfg.Lx, cfg.Ly, 0};
  const Orography oro =
      cfg.orography == "bump" ? bump_orography(fine, cfg.bump_height) : Orography::flat(fine);
  return build_nested_pair(fine, VerticalGrid::uniform(cfg.layers, cfg.z_top), cfg.refinement, oro);
}

PrescribedWind deformational_wind(double Lx, double Ly, double U0, double tau) {
  using std::numbers::pi;
  auto sq = [](double s) { return s * s; };
  return {
      [=](double x, double y, double t) {
        return U0 * sq(std::sin(pi * x / Lx)) * std::sin(2 * pi * y / Ly) * std::cos(pi * t / tau);
      },
      [=](double x, double y, double t) {
        return -U0 * sq(std::sin(pi * y / Ly)) * std::sin(2 * pi * x / Lx) * std::cos(pi * t / tau);
      }};
}

Eigen::VectorXd cell_heights(const ExtrudedMesh& mesh) {
  const HorizontalMesh& h = mesh.horizontal();
  Eigen::VectorXd z(mesh.cell_count());
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k < mesh.layers(); ++k) {
        double s = 0.0;
        for (int kk : {k, k + 1})
          s += mesh.vertex_z(i, j, kk) + mesh.vertex_z(i + 1, j, kk) + mesh.vertex_z(i, j + 1, kk) +
               mesh.vertex_z(i + 1, j + 1, kk);
        z[mesh.cell_dof(h.column(i, j), k)] = s / 8.0;
      }
  return z;
}

Field transport_density(const MeshHandle& mesh) {
  const HorizontalMesh& h = mesh->horizontal();
  Field rho(Space::Vrho, mesh);
  for (int j = 0; j < h.ny; ++j) {
    const double s = std::sin(std::numbers::pi * h.centre_y(j) / h.Ly);
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k < mesh->layers(); ++k) rho[mesh->cell_dof(h.column(i, j), k)] = 0.5 + 0.5 * s * s;
  }
  return rho;
}

Field gaussian_hills(const MeshHandle& mesh) {
  const HorizontalMesh& h = mesh->horizontal();
  const double radius = h.Lx / 8.0;
  Field a(Space::Vrho, mesh);
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i) {
      double v = 0.5;
      for (double xc : {0.5 * h.Lx - h.Lx / 8.0, 0.5 * h.Lx + h.Lx / 8.0}) {
        const double L = std::hypot(periodic_offset(h.centre_x(i), xc, h.Lx),
                                    periodic_offset(h.centre_y(j), 0.5 * h.Ly, h.Ly));
        v += std::exp(-(L / radius) * (L / radius));
      }
      for (int k = 0; k < mesh->layers(); ++k) a[mesh->cell_dof(h.column(i, j), k)] = v;
    }
  return a;
}

Field physics_density(const MeshHandle& mesh) {
  using std::numbers::pi;
  const HorizontalMesh& h = mesh->horizontal();
  const Eigen::VectorXd z = cell_heights(*mesh);
  Field rho(Space::Vrho, mesh);
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k < mesh->layers(); ++k) {
        const Eigen::Index d = mesh->cell_dof(h.column(i, j), k);
        rho[d] = 1.2 * std::exp(-z[d] / 8000.0) *
                 (1.0 + 0.05 * std::sin(2 * pi * h.centre_x(i) / h.Lx) * std::cos(2 * pi * h.centre_y(j) / h.Ly));
      }
  return rho;
}

Field physics_theta(const MeshHandle& mesh) {
  return Field(Space::Vtheta, mesh, (300.0 + 0.004 * level_heights(*mesh).array()).matrix());
}

std::string dump_name(std::string_view experiment, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", t);
  return std::string(experiment) + "_" + buf + ".txt";
}

namespace {

void dump(const std::string& dir, std::string_view experiment, double t, const Field& f) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = std::filesystem::path(dir) / dump_name(experiment, t);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_field(os, f);
}

double min_of(const Field& f) { return f.values().minCoeff(); }
double max_of(const Field& f) { return f.values().maxCoeff(); }

}  // namespace

Diagnostics run_transport(const ExperimentConfig& cfg, const std::string& output_dir) {
  const NestedMeshPair pair = build_pair(cfg);
  Remapper remap(pair);
  if (cfg.corrupt_density_weights) remap.corrupt_density_weights(1.01);

  const HorizontalMesh& h = pair.fine->horizontal();
  const double U0 = cfg.wind == "zero" ? 0.0 : cfg.courant * std::min(h.dx(), h.dy()) / cfg.dt;
  const PrescribedWind wind = deformational_wind(h.Lx, h.Ly, U0, cfg.tau);
  const FluxOperatorConfig flux{cfg.flux_scheme, cfg.substeps};

  const Field first = cfg.tracer == "hills" ? gaussian_hills(pair.coarse)
                                            : Field::constant(Space::Vrho, pair.coarse, cfg.tracer_value);
  const Field second = Field::constant(Space::Vrho, pair.coarse, cfg.tracer_value);
  TransportState state = make_transport_state(remap, transport_density(pair.fine), {first, second}, cfg.dt);
  TransportState adv = state;
  const bool advective = cfg.advective();
  const std::size_t species = state.mixing_ratio.size();

  Diagnostics diag;
  diag.columns = {"step", "t", "dry_mass"};
  for (std::size_t y = 0; y < species; ++y)
    for (const char* c : {"tracer_mass_", "tracer_drift_", "min_a_", "max_a_"})
      diag.columns.push_back(c + std::to_string(y));
  diag.columns.push_back("max_const_err");
  if (advective)
    for (std::size_t y = 0; y < species; ++y)
      for (const char* c : {"adv_mass_", "adv_drift_", "adv_min_a_", "adv_max_a_"})
        diag.columns.push_back(c + std::to_string(y));

  std::vector<double> mass0, adv_mass0;
  for (std::size_t y = 0; y < species; ++y) mass0.push_back(total_mass(state.tracer_density[y]));
  adv_mass0 = mass0;
  auto record = [&](int step) {
    std::vector<double> row{double(step), state.t, total_mass(state.rho_dry)};
    for (std::size_t y = 0; y < species; ++y) {
      const double m = total_mass(state.tracer_density[y]);
      row.insert(row.end(), {m, (m - mass0[y]) / mass0[y], min_of(state.mixing_ratio[y]),
                             max_of(state.mixing_ratio[y])});
    }
    double err = (state.mixing_ratio[1].values().array() - cfg.tracer_value).abs().maxCoeff();
    if (cfg.tracer == "constant")
      err = std::max(err, (state.mixing_ratio[0].values().array() - cfg.tracer_value).abs().maxCoeff());
    row.push_back(err);
    if (advective)
      for (std::size_t y = 0; y < species; ++y) {
        const double m = total_mass(adv.tracer_density[y]);
        row.insert(row.end(), {m, (m - adv_mass0[y]) / adv_mass0[y], min_of(adv.mixing_ratio[y]),
                               max_of(adv.mixing_ratio[y])});
      }
    diag.add_row(std::move(row));
  };
  auto dump_all = [&] {
    const std::string name(to_string(cfg.experiment));
    dump(output_dir, name, state.t, state.mixing_ratio[0]);
    if (advective) dump(output_dir, name + "_baseline", state.t, adv.mixing_ratio[0]);
  };

  const int steps = cfg.steps();
  record(0);
  dump_all();
  for (int n = 1; n <= steps; ++n) {
    step_dry_density(state, wind, flux);
    if (advective) {
      adv.rho_dry = state.rho_dry;
      adv.mass_flux = state.mass_flux;
      adv.mean_wind = state.mean_wind;
      adv.t = state.t;
      step_coarse_tracer_advective(adv, remap, cfg.flux_scheme);
    }
    step_coarse_tracer(state, remap, cfg.flux_scheme);
    record(n);
    if (n == steps / 2 || n == steps) dump_all();
  }
  return diag;
}

namespace {

struct PhysicsSetup {
  MoistState state;
  Field rho;
};

PhysicsSetup physics_initial_state(const ExperimentConfig& cfg, const MeshHandle& mesh,
                                   const PhysicsParams& params) {
  const HorizontalMesh& h = mesh->horizontal();
  const Eigen::VectorXd z = level_heights(*mesh);
  Field theta = physics_theta(mesh);
  Field vapour(Space::Vtheta, mesh);
  Field cloud = Field::zero(Space::Vtheta, mesh);
  std::mt19937_64 rng(cfg.seed);
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i) {
      const int c = h.column(i, j);
      const bool hole = (rng() >> 63) != 0;
      for (int k = 0; k <= mesh->layers(); ++k) {
        const Eigen::Index d = mesh->level_dof(c, k);
        const double sat = params.saturation(theta[d], z[d]);
        if (cfg.moisture_profile == "blob") {
          const double rx = periodic_offset(h.centre_x(i), 0.5 * h.Lx, h.Lx) / (0.2 * h.Lx);
          const double ry = periodic_offset(h.centre_y(j), 0.5 * h.Ly, h.Ly) / (0.2 * h.Ly);
          const double rz = (z[d] - 0.3 * cfg.z_top) / (0.15 * cfg.z_top);
          vapour[d] = sat * (0.7 + 0.6 * std::exp(-(rx * rx + ry * ry + rz * rz)));
        } else {
          // Subsaturated air with cloud in about half of the columns.
          vapour[d] = 0.2 * sat;
          cloud[d] = hole ? 0.0 : 0.002 * std::exp(-z[d] / 3000.0);
        }
      }
    }
  return {{theta, vapour, cloud}, physics_density(mesh)};
}

}  // namespace

Diagnostics run_physics_demo(const ExperimentConfig& cfg, const std::string& output_dir) {
  const NestedMeshPair pair = build_pair(cfg);
  Remapper remap(pair);
  if (cfg.corrupt_density_weights) remap.corrupt_density_weights(1.01);
  const bool fine_physics = cfg.experiment == Experiment::physics_fine;
  const MeshHandle& dynamics = fine_physics ? pair.coarse : pair.fine;
  const PhysicsParams params = cfg.physics_params();
  PhysicsSetup setup = physics_initial_state(cfg, dynamics, params);
  MoistState& x = setup.state;
  const std::string name(to_string(cfg.experiment));

  Diagnostics diag;
  diag.columns = {"step", "t", "moist_mass", "moist_drift", "min_vapour", "min_cloud",
                  "max_cloud", "theta_min", "theta_max", "theta_mean", "limited_cells", "clipped"};
  auto moist_mass = [&] { return column_moist_mass(x.vapour + x.cloud, setup.rho).sum(); };
  const double mass0 = moist_mass();
  CouplingStats stats;
  double t = 0.0;
  auto record = [&](int step) {
    const double m = moist_mass();
    diag.add_row({double(step), t, m, (m - mass0) / mass0, min_of(x.vapour), min_of(x.cloud),
                  max_of(x.cloud), min_of(x.theta), max_of(x.theta), x.theta.values().mean(),
                  double(stats.remap.limited_cells), double(stats.clipped_after_update)});
  };

  const int steps = cfg.steps();
  record(0);
  dump(output_dir, name, t, x.cloud);
  for (int n = 1; n <= steps; ++n) {
    x = fine_physics ? apply_physics_fine(remap, x, setup.rho, params, nullptr, &stats)
                     : apply_physics_coarse(remap, x, setup.rho, params, nullptr, &stats);
    t = n * cfg.dt;
    record(n);
    if (n == steps / 2 || n == steps) dump(output_dir, name, t, x.cloud);
  }
  return diag;
}

}  // namespace nestfield
