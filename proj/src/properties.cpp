#include "nestfield/properties.hpp"

#include "nestfield/experiments.hpp"
#include "nestfield/physics.hpp"
#include "nestfield/transport.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

namespace nestfield {

bool PropertyResult::check_holds() const {
  if (!std::isfinite(value)) return false;
  return lower_bound ? value >= tolerance : value <= tolerance;
}

bool PropertyReport::all_passed() const {
  for (const auto& r : results)
    if (!r.passed()) return false;
  return true;
}

void PropertyReport::write(std::ostream& os) const {
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%s  %-52s %s %.3e  tol %s %.1e%s\n", r.passed() ? "PASS" : "FAIL",
                  r.name.c_str(), r.lower_bound ? "value" : "worst", r.value, r.lower_bound ? ">=" : "<=",
                  r.tolerance, r.expect_failure ? "  (expected to fail)" : "");
    os << buf;
  }
  int failed = 0;
  for (const auto& r : results) failed += !r.passed();
  os << results.size() - failed << "/" << results.size() << " properties passed\n";
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Field random_field(Space space, const MeshHandle& mesh, Rng& rng, double lo, double hi) {
  Field f(space, mesh);
  for (Eigen::Index d = 0; d < f.size(); ++d) f[d] = uniform(rng, lo, hi);
  return f;
}

Field random_density(const MeshHandle& mesh, Rng& rng) {
  return random_field(Space::Vrho, mesh, rng, 0.5, 1.5);
}

Field adversarial_moisture(const MeshHandle& mesh, Rng& rng, int kind) {
  const HorizontalMesh& h = mesh->horizontal();
  const int nk = mesh->layers();
  Field m = Field::zero(Space::Vtheta, mesh);
  const double amp = std::pow(10.0, uniform(rng, -4.0, 0.0));
  const int i0 = int(uniform(rng, 0, h.nx));
  const int j0 = int(uniform(rng, 0, h.ny));
  const int k0 = int(uniform(rng, 0, nk + 1));
  for (int j = 0; j < h.ny; ++j)
    for (int i = 0; i < h.nx; ++i)
      for (int k = 0; k <= nk; ++k) {
        double& v = m[mesh->level_dof(h.column(i, j), k)];
        switch (kind % 5) {
          case 0: v = (i < i0) ? amp : 0.0; break;                          // horizontal front
          case 1: v = uniform(rng, 0, 1) < 0.5 ? 0.0 : amp * uniform(rng, 0, 1); break;  // zeros
          case 2: v = uniform(rng, 0, 1) < 0.05 ? amp : 1e-12 * uniform(rng, 0, 1); break;  // plateau
          case 3: v = (i == i0 && j == j0) ? amp : 0.0; break;              // spike
          default: v = (k <= k0) ? amp : 0.0; break;                         // vertical front
        }
      }
  return m;
}

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double max_diff(const Field& a, const Field& b) { return max_abs(a.values() - b.values()); }
double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return max_abs(a - b) / std::max(max_abs(b), std::numeric_limits<double>::min());
}

struct Meshes {
  NestedMeshPair pair;
  std::string label;
};

class Suite {
 public:
  explicit Suite(const ExperimentConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    ExperimentConfig flat = cfg;
    flat.orography = "flat";
    ExperimentConfig bump = cfg;
    bump.orography = "bump";
    meshes_.push_back({build_pair(flat), "flat"});
    meshes_.push_back({build_pair(bump), "bump"});
    for (auto& m : meshes_) {
      remaps_.emplace_back(m.pair);
      if (cfg.corrupt_density_weights) remaps_.back().corrupt_density_weights(1.01);
    }
  }

  PropertyReport run() {
    reversibility();
    identification();
    density_conservation();
    shifted_density_conservation();
    moist_mass_conservation();
    commutation();
    constants();
    if (cfg_.orography == "bump") constant_density_on_bump();
    zeros();
    positivity_prolongation();
    positivity_coarse_physics();
    linear_correlation();
    extrema();
    accuracy();
    steady_state();
    increment_rule();
    flux_constancy();
    divergence_theorem();
    transport();
    return report_;
  }

 private:
  void add(std::string name, double value, double tol, bool lower = false, bool expect_fail = false) {
    report_.results.push_back({std::move(name), value, tol, lower, expect_fail});
  }
  int trials() const { return cfg_.trials; }

  DryDensityContext coarse_context(const Remapper& r) {
    return DryDensityContext::from_coarse(r, random_density(r.coarse(), rng_));
  }
  Field positive_moisture(const MeshHandle& mesh) { return random_field(Space::Vtheta, mesh, rng_, 1.0, 2.0); }

  void reversibility() {
    double scalar = 0, density = 0, wind = 0, moist = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t) {
        for (Space s : {Space::Vrho, Space::Vtheta}) {
          const Field x = random_field(s, r.coarse(), rng_);
          scalar = std::max(scalar, max_diff(r.restrict_scalar(r.prolong_scalar(x)), x));
        }
        for (Space s : {Space::Vrho, Space::VrhoShifted}) {
          const Field x = random_field(s, r.coarse(), rng_, 0.5, 1.5);
          density = std::max(density, max_diff(r.restrict_density(r.prolong_density(x)), x));
        }
        const Field u = random_field(Space::Vu, r.coarse(), rng_);
        wind = std::max(wind, max_diff(r.restrict_wind(r.prolong_wind(u)), u));
        const MoistureRemapper mr(r, coarse_context(r));
        const Field m = positive_moisture(r.coarse());
        moist = std::max(moist, max_diff(mr.restrict_mixing_ratio(mr.prolong_mixing_ratio(m)), m));
      }
    add("reversibility A_Pi B_Pi", scalar, 1e-13);
    add("reversibility A_rho B_rho", density, 1e-13);
    add("reversibility A_u B_u", wind, 1e-13);
    add("reversibility A_m B_m", moist, 1e-13);
  }

  void identification() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t) {
        const Field x = random_field(Space::Vtheta, r.coarse(), rng_);
        worst = std::max(worst, max_diff(r.restrict_scalar(r.identify_scalar(x)), x));
        const Field rho = random_field(Space::Vrho, r.coarse(), rng_, 0.5, 1.5);
        worst = std::max(worst, max_diff(r.restrict_density(r.identify_density(rho)), rho));
        const MoistureRemapper mr(r, coarse_context(r));
        const Field m = positive_moisture(r.coarse());
        worst = std::max(worst, max_diff(mr.restrict_mixing_ratio(mr.identify_mixing_ratio(m)), m));
      }
    add("identification A I = identity", worst, 1e-13);
  }

  void density_conservation() {
    double worst = 0;
    for (const Remapper& r : remaps_) {
      const int nk = r.fine()->layers();
      for (int t = 0; t < trials(); ++t) {
        const Field fine = random_density(r.fine(), rng_);
        const Field coarse = random_density(r.coarse(), rng_);
        const Eigen::VectorXd parent = cell_masses(r.restrict_density(fine));
        worst = std::max(worst, rel_diff(parent, sum_to_coarse(r.pair(), cell_masses(fine), nk)));
        for (const Field& f : {r.identify_density(coarse), r.prolong_density(coarse)})
          worst = std::max(worst, rel_diff(sum_to_coarse(r.pair(), cell_masses(f), nk), cell_masses(coarse)));
      }
    }
    add("mass conservation A_rho I_rho B_rho", worst, 1e-13);
  }

  void shifted_density_conservation() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t)
        for (const MeshHandle& mesh : {r.fine(), r.coarse()}) {
          const Field rho = random_density(mesh, rng_);
          worst = std::max(worst, rel_diff(sum_columns(*mesh, cell_masses(shift_density(rho)), mesh->layers() + 1),
                                           sum_columns(*mesh, cell_masses(rho), mesh->layers())));
        }
    add("column mass conservation Q", worst, 1e-13);
  }

  void moist_mass_conservation() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t) {
        const MoistureRemapper mr(r, coarse_context(r));
        const DryDensityContext& dry = mr.dry();
        auto fine_cols = [&](const Field& m) {
          return sum_to_coarse(r.pair(), column_moist_mass(m, dry.fine()), 1);
        };
        const Field mc = adversarial_moisture(r.coarse(), rng_, t) + positive_moisture(r.coarse());
        const Eigen::VectorXd coarse_mass = column_moist_mass(mc, dry.coarse());
        worst = std::max(worst, rel_diff(fine_cols(mr.identify_mixing_ratio(mc)), coarse_mass));
        worst = std::max(worst, rel_diff(fine_cols(mr.prolong_mixing_ratio(mc)), coarse_mass));
        const Field mf = positive_moisture(r.fine());
        worst = std::max(worst, rel_diff(column_moist_mass(mr.restrict_mixing_ratio(mf), dry.coarse()), fine_cols(mf)));
      }
    add("moist mass conservation A_m I_m B_m", worst, 1e-13);
  }

  void commutation() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t) {
        const Field f = random_field(Space::Vu, r.fine(), rng_);
        worst = std::max(worst, max_diff(r.restrict_density(divergence(f)), divergence(r.restrict_wind(f))));
      }
    add("commutation A_rho div = div A_u", worst, 1e-12);
  }

  void constants() {
    const Remapper& r = remaps_.front();  // flat
    double worst = 0;
    for (int t = 0; t < trials(); ++t) {
      const double c = uniform(rng_, 0.1, 2.0);
      auto err = [&](const Field& f) { worst = std::max(worst, max_abs(f.values().array() - c)); };
      for (Space s : {Space::Vrho, Space::Vtheta}) {
        err(r.restrict_scalar(Field::constant(s, r.fine(), c)));
        err(r.identify_scalar(Field::constant(s, r.coarse(), c)));
        err(r.reconstruct_scalar(Field::constant(s, r.coarse(), c)));
        err(r.prolong_scalar(Field::constant(s, r.coarse(), c)));
      }
      for (Space s : {Space::Vrho, Space::VrhoShifted}) {
        err(r.restrict_density(Field::constant(s, r.fine(), c)));
        err(r.identify_density(Field::constant(s, r.coarse(), c)));
        err(r.prolong_density(Field::constant(s, r.coarse(), c)));
      }
      err(r.restrict_wind(Field::constant(Space::Vu, r.fine(), c)));
      err(r.prolong_wind(Field::constant(Space::Vu, r.coarse(), c)));
      const MoistureRemapper mr(r, coarse_context(r));
      err(mr.restrict_mixing_ratio(Field::constant(Space::Vtheta, r.fine(), c)));
      err(mr.prolong_mixing_ratio(Field::constant(Space::Vtheta, r.coarse(), c)));
      const MoistureRemapper uniform_dry(
          r, DryDensityContext::from_coarse(r, Field::constant(Space::Vrho, r.coarse(), uniform(rng_, 0.5, 1.5))));
      err(uniform_dry.identify_mixing_ratio(Field::constant(Space::Vtheta, r.coarse(), c)));
    }
    add("constants preserved (flat mesh)", worst, 1e-13);
  }

  void constant_density_on_bump() {
    const Remapper& r = remaps_.back();
    const Field c = Field::constant(Space::Vrho, r.coarse(), 1.0);
    add("constant rho under I_rho on bump mesh", max_abs(r.identify_density(c).values().array() - 1.0), 1e-13,
        false, true);
  }

  void zeros() {
    double worst = 0;
    for (const Remapper& r : remaps_) {
      auto err = [&](const Field& f) { worst = std::max(worst, max_abs(f.values())); };
      for (Space s : {Space::Vrho, Space::Vtheta}) {
        err(r.restrict_scalar(Field::zero(s, r.fine())));
        err(r.prolong_scalar(Field::zero(s, r.coarse())));
        err(r.restrict_density(Field::zero(s == Space::Vrho ? s : Space::VrhoShifted, r.fine())));
        err(r.prolong_density(Field::zero(s == Space::Vrho ? s : Space::VrhoShifted, r.coarse())));
      }
      err(r.restrict_wind(Field::zero(Space::Vu, r.fine())));
      err(r.prolong_wind(Field::zero(Space::Vu, r.coarse())));
      const MoistureRemapper mr(r, coarse_context(r));
      err(mr.restrict_mixing_ratio(Field::zero(Space::Vtheta, r.fine())));
      err(mr.identify_mixing_ratio(Field::zero(Space::Vtheta, r.coarse())));
      err(mr.prolong_mixing_ratio(Field::zero(Space::Vtheta, r.coarse())));
    }
    add("zero fields preserved exactly", worst, 0.0);
  }

  void positivity_prolongation() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < 5 * trials(); ++t) {
        const MoistureRemapper mr(r, coarse_context(r));
        const Field species[] = {adversarial_moisture(r.coarse(), rng_, t),
                                 adversarial_moisture(r.coarse(), rng_, t + 1)};
        for (const Field& f : mr.prolong_mixing_ratios(species)) worst = std::max(worst, -f.values().minCoeff());
      }
    add("positivity B_m (adversarial)", worst, 1e-13);
  }

  MoistState adversarial_state(const MeshHandle& mesh, int t) {
    const Field noise = random_field(Space::Vtheta, mesh, rng_, -2.0, 2.0);
    return {physics_theta(mesh) + noise, 0.02 * adversarial_moisture(mesh, rng_, t),
            0.01 * adversarial_moisture(mesh, rng_, t + 2)};
  }

  void positivity_coarse_physics() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < 5 * trials(); ++t) {
        PhysicsParams p = cfg_.physics_params();
        p.scheme = PhysicsScheme::condensation;
        p.fraction = uniform(rng_, 0.1, 1.0);
        const MoistState x = adversarial_state(r.fine(), t);
        const MoistState y = apply_physics_coarse(r, x, random_density(r.fine(), rng_), p);
        worst = std::max({worst, -y.vapour.values().minCoeff(), -y.cloud.values().minCoeff()});
      }
    add("positivity apply_physics_coarse (adversarial)", worst, 1e-13);
  }

  void linear_correlation() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t) {
        const double alpha = uniform(rng_, 0.5, 3.0), beta = uniform(rng_, 0.0, 0.5);
        const MoistureRemapper mr(r, coarse_context(r));
        const Field m2 = positive_moisture(r.coarse());
        const Field m1 = alpha * m2 + Field::constant(Space::Vtheta, r.coarse(), beta);
        const Field pair[] = {m1, m2};
        const auto fine = mr.prolong_mixing_ratios(pair);
        worst = std::max(worst, max_abs(fine[0].values() - (alpha * fine[1].values()).array().matrix() -
                                        Eigen::VectorXd::Constant(fine[1].size(), beta)));
        const Field back1 = mr.restrict_mixing_ratio(fine[0]);
        const Field back2 = mr.restrict_mixing_ratio(fine[1]);
        worst = std::max(worst, max_abs(back1.values() - alpha * back2.values() -
                                        Eigen::VectorXd::Constant(back2.size(), beta)));
      }
    add("linear correlation through B_m and A_m", worst, 1e-12);
  }

  void extrema() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t)
        for (Space s : {Space::Vrho, Space::Vtheta}) {
          const Field x = random_field(s, r.coarse(), rng_);
          const Field b = r.prolong_scalar(x);
          worst = std::max({worst, b.values().minCoeff() - x.values().minCoeff(),
                            x.values().maxCoeff() - b.values().maxCoeff()});
        }
    add("extrema containment B_Pi", worst, 0.0);
  }

  void accuracy() {
    std::vector<double> err;
    for (int n : {8, 16, 32}) err.push_back(prolongation_error(n));
    double order = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < err.size(); ++i) order = std::min(order, std::log2(err[i - 1] / err[i]));
    add("prolongation order (sin x sin)", order, 1.9, true);
  }

  double prolongation_error(int n) {
    using std::numbers::pi;
    HorizontalMesh fine{2 * n, 2 * n, 1.0, 1.0, 0};
    const NestedMeshPair pair = build_nested_pair(fine, VerticalGrid::uniform(1, 1.0), 2, Orography::flat(fine));
    const Remapper r(pair);
    auto f = [&](double x, double y) { return std::sin(2 * pi * x) * std::sin(2 * pi * y); };
    auto sample = [&](const MeshHandle& mesh) {
      const HorizontalMesh& h = mesh->horizontal();
      Field out(Space::Vrho, mesh);
      for (int j = 0; j < h.ny; ++j)
        for (int i = 0; i < h.nx; ++i) out[mesh->cell_dof(h.column(i, j), 0)] = f(h.centre_x(i), h.centre_y(j));
      return out;
    };
    return max_diff(r.prolong_scalar(sample(pair.coarse)), sample(pair.fine));
  }

  void steady_state() {
    PhysicsParams p = cfg_.physics_params();
    p.scheme = PhysicsScheme::identity;
    double worst = 0;
    for (const Remapper& r : remaps_) {
      for (bool fine_physics : {true, false}) {
        const MeshHandle& mesh = fine_physics ? r.coarse() : r.fine();
        const MoistState x0{physics_theta(mesh), 0.01 * positive_moisture(mesh),
                            0.001 * adversarial_moisture(mesh, rng_, 1)};
        const Field rho = random_density(mesh, rng_);
        MoistState x = x0;
        for (int call = 0; call < trials(); ++call)
          x = fine_physics ? apply_physics_fine(r, x, rho, p) : apply_physics_coarse(r, x, rho, p);
        worst = std::max({worst, max_diff(x.theta, x0.theta), max_diff(x.vapour, x0.vapour),
                          max_diff(x.cloud, x0.cloud)});
      }
    }
    add("steady state under identity physics", worst, 1e-13);
  }

  void increment_rule() {
    const Remapper& r = remaps_.front();
    const PhysicsParams p = cfg_.physics_params();
    CouplingRecorder fine_rec, coarse_rec;
    const MoistState xc{physics_theta(r.coarse()), 0.01 * positive_moisture(r.coarse()),
                        Field::zero(Space::Vtheta, r.coarse())};
    apply_physics_fine(r, xc, random_density(r.coarse(), rng_), p, &fine_rec);
    const MoistState xf{physics_theta(r.fine()), 0.01 * positive_moisture(r.fine()),
                        Field::zero(Space::Vtheta, r.fine())};
    apply_physics_coarse(r, xf, random_density(r.fine(), rng_), p, &coarse_rec);
    const bool ok = fine_rec.fields_before_increments() && coarse_rec.fields_before_increments() &&
                    fine_rec.events().size() == 6 && coarse_rec.events().size() == 6;
    add("fields mapped before physics, increments after", ok ? 0.0 : 1.0, 0.0);
  }

  void flux_constancy() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t) {
        const double c = uniform(rng_, -2.0, 2.0);
        const Field f = random_field(Space::Vu, r.coarse(), rng_);
        for (FluxScheme s : {FluxScheme::upwind1, FluxScheme::linear_upwind2})
          worst = std::max(worst, max_diff(flux_operator(Field::constant(Space::Vrho, r.coarse(), c), f, s), c * f));
      }
    add("flux operator F[C, F] = C F", worst, 1e-15);
  }

  void divergence_theorem() {
    double worst = 0;
    for (const Remapper& r : remaps_)
      for (int t = 0; t < trials(); ++t) {
        Field f = random_field(Space::Vu, r.fine(), rng_);
        const ExtrudedMesh& m = *r.fine();
        for (int c = 0; c < m.columns(); ++c)  // no flow through ground or lid
          f[m.face_dof(FaceDir::z, c, 0)] = f[m.face_dof(FaceDir::z, c, m.layers())] = 0.0;
        const Eigen::VectorXd& vol = m.cell_volumes();
        const double total = divergence(f).values().dot(vol);
        const double scale = f.values().cwiseAbs().dot(r.fine()->face_areas());
        worst = std::max(worst, std::abs(total) / scale);
      }
    add("global divergence sums to zero", worst, 1e-13);
  }

  void transport() {
    double dry = 0, tracer = 0, consistency = 0;
    // A fixed-length run per flow; more trials draw more flows rather than
    // longer runs, which would let the divergent part empty cells.
    const int steps = 100, flows = 1 + trials() / 50;
    for (const Remapper& r : remaps_)
      for (int f = 0; f < flows; ++f) {
        const HorizontalMesh& h = r.fine()->horizontal();
        const double dt = 4.0, U0 = 0.2 * h.dx() / dt;
        const double p1 = uniform(rng_, 0, 6.28), p2 = uniform(rng_, 0, 6.28);
        using std::numbers::pi;
        // Translation plus a weak divergent part that completes one period over the run.
        const double span = steps * dt;
        const PrescribedWind wind{
            [=](double x, double y, double t) {
              return U0 * (0.5 + 0.2 * std::sin(2 * pi * x / h.Lx + p1) * std::cos(2 * pi * y / h.Ly) *
                                     std::cos(2 * pi * t / span));
            },
            [=](double x, double y, double t) {
              return U0 * (0.3 + 0.2 * std::cos(2 * pi * x / h.Lx) * std::sin(2 * pi * y / h.Ly + p2) *
                                     std::cos(2 * pi * t / span));
            }};
        for (FluxScheme s : {FluxScheme::upwind1, FluxScheme::linear_upwind2}) {
          const Field hills = gaussian_hills(r.coarse());
          TransportState st = make_transport_state(r, random_density(r.fine(), rng_),
                                                   {hills, Field::constant(Space::Vrho, r.coarse(), 0.5)}, dt);
          const double dry0 = total_mass(st.rho_dry), tr0 = total_mass(st.tracer_density[0]);
          for (int n = 0; n < steps; ++n) {
            step_dry_density(st, wind, {s, 1});
            step_coarse_tracer(st, r, s);
            dry = std::max(dry, std::abs(total_mass(st.rho_dry) - dry0) / dry0);
            tracer = std::max(tracer, std::abs(total_mass(st.tracer_density[0]) - tr0) / tr0);
            consistency = std::max(consistency, max_abs(st.mixing_ratio[1].values().array() - 0.5));
          }
        }
      }
    add("fine dry mass conservation", dry, 1e-13);
    add("coarse tracer mass conservation", tracer, 1e-12);
    add("constant mixing ratio preserved by transport", consistency, 1e-12);
  }

  ExperimentConfig cfg_;
  Rng rng_;
  std::vector<Meshes> meshes_;
  std::vector<Remapper> remaps_;
  PropertyReport report_;
};

}  // namespace

PropertyReport run_properties(const ExperimentConfig& cfg) { return Suite(cfg).run(); }

}  // namespace nestfield
