#include "nestfield/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace nestfield {

Experiment experiment_from_string(std::string_view name) {
  if (name == "transport") return Experiment::transport;
  if (name == "transport-advective") return Experiment::transport_advective;
  if (name == "physics-fine") return Experiment::physics_fine;
  if (name == "physics-coarse") return Experiment::physics_coarse;
  if (name == "properties") return Experiment::properties;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::transport: return "transport";
    case Experiment::transport_advective: return "transport-advective";
    case Experiment::physics_fine: return "physics-fine";
    case Experiment::physics_coarse: return "physics-coarse";
    case Experiment::properties: return "properties";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError("bad value '" + v + "' for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("bad boolean '" + v + "' for key '" + key + "'");
}

std::string one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return v;
  throw ConfigError("bad value '" + v + "' for key '" + key + "'");
}

}  // namespace

void set_option(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  auto i = [&] { return parse_number<int>(key, v); };
  auto d = [&] { return parse_number<double>(key, v); };
  try {
    if (key == "experiment") c.experiment = experiment_from_string(v);
    else if (key == "nx") c.nx = i();
    else if (key == "ny") c.ny = i();
    else if (key == "refinement") c.refinement = i();
    else if (key == "layers") c.layers = i();
    else if (key == "dt") c.dt = d();
    else if (key == "tau") c.tau = d();
    else if (key == "flux_scheme") c.flux_scheme = flux_scheme_from_string(v);
    else if (key == "substeps") c.substeps = i();
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "Lx") c.Lx = d();
    else if (key == "Ly") c.Ly = d();
    else if (key == "z_top") c.z_top = d();
    else if (key == "orography") c.orography = one_of(key, v, {"flat", "bump"});
    else if (key == "bump_height") c.bump_height = d();
    else if (key == "wind") c.wind = one_of(key, v, {"deformational", "zero"});
    else if (key == "courant") c.courant = d();
    else if (key == "tracer") c.tracer = one_of(key, v, {"hills", "constant"});
    else if (key == "tracer_value") c.tracer_value = d();
    else if (key == "physics_scheme") c.physics_scheme = physics_scheme_from_string(v);
    else if (key == "moisture_profile") c.moisture_profile = one_of(key, v, {"blob", "holes"});
    else if (key == "fraction") c.fraction = d();
    else if (key == "trials") c.trials = i();
    else if (key == "corrupt_density_weights") c.corrupt_density_weights = parse_bool(key, v);
    else throw ConfigError("unknown key '" + key + "'");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void read_config(std::istream& is, ExperimentConfig& cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    set_option(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void read_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  read_config(in, cfg);
}

int ExperimentConfig::steps() const { return static_cast<int>(std::llround(tau / dt)); }

void ExperimentConfig::finalize() {
  const bool transport = experiment == Experiment::transport || advective();
  if (nx == 0) nx = transport ? 64 : physics() ? 16 : 12;
  if (ny == 0) ny = nx;
  if (layers == 0) layers = transport ? 1 : physics() ? 6 : 4;
  if (Lx == 0.0) Lx = 1000.0 * nx;
  if (Ly == 0.0) Ly = 1000.0 * ny;

  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(nx > 0 && ny > 0, "nx and ny must be positive");
  check(refinement >= 2, "refinement must be at least 2");
  check(nx % refinement == 0 && ny % refinement == 0, "refinement must divide nx and ny");
  check(layers >= 1, "layers must be positive");
  check(!physics() || layers >= 4, "physics experiments need at least 4 layers");
  check(std::isfinite(dt) && dt > 0.0, "dt must be positive");
  check(std::isfinite(tau) && tau > 0.0, "tau must be positive");
  check(std::abs(tau / dt - std::round(tau / dt)) <= 1e-9 * (tau / dt), "tau must be a whole number of steps");
  check(steps() >= 1, "tau must be at least one step");
  check(substeps >= 1, "substeps must be positive");
  check(Lx > 0.0 && Ly > 0.0 && z_top > 0.0, "domain extents must be positive");
  check(bump_height >= 0.0 && bump_height < z_top, "bump_height must lie in [0, z_top)");
  check(std::isfinite(courant) && courant >= 0.0, "courant must be non-negative");
  check(std::isfinite(tracer_value), "tracer_value must be finite");
  check(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
  check(trials >= 1, "trials must be positive");
}

PhysicsParams ExperimentConfig::physics_params() const {
  PhysicsParams p;
  p.scheme = physics_scheme;
  p.fraction = fraction;
  p.validate();
  return p;
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  os << "experiment=" << to_string(c.experiment) << '\n'
     << "nx=" << c.nx << '\n'
     << "ny=" << c.ny << '\n'
     << "refinement=" << c.refinement << '\n'
     << "layers=" << c.layers << '\n'
     << "dt=" << c.dt << '\n'
     << "tau=" << c.tau << '\n'
     << "flux_scheme=" << to_string(c.flux_scheme) << '\n'
     << "substeps=" << c.substeps << '\n'
     << "output_dir=" << c.output_dir << '\n'
     << "seed=" << c.seed << '\n'
     << "Lx=" << c.Lx << '\n'
     << "Ly=" << c.Ly << '\n'
     << "z_top=" << c.z_top << '\n'
     << "orography=" << c.orography << '\n'
     << "bump_height=" << c.bump_height << '\n'
     << "wind=" << c.wind << '\n'
     << "courant=" << c.courant << '\n'
     << "tracer=" << c.tracer << '\n'
     << "tracer_value=" << c.tracer_value << '\n'
     << "physics_scheme=" << to_string(c.physics_scheme) << '\n'
     << "moisture_profile=" << c.moisture_profile << '\n'
     << "fraction=" << c.fraction << '\n'
     << "trials=" << c.trials << '\n'
     << "corrupt_density_weights=" << (c.corrupt_density_weights ? 1 : 0) << '\n';
}

}  // namespace nestfield
