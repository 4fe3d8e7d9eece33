#include "mqed/config.hpp"

#include <fstream>
#include <set>

namespace mqed {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return j.at(key).get<T>();
}

std::array<double, 3> vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Task parse_task(const std::string& s) {
  if (s == "decompose") return Task::decompose;
  if (s == "modes") return Task::modes;
  if (s == "verify") return Task::verify;
  if (s == "ldos") return Task::ldos;
  if (s == "rate") return Task::rate;
  if (s == "cavity-factor") return Task::cavity_factor;
  throw ConfigError("unknown task '" + s + "'");
}

AtomSpec parse_atom(const json& j, const std::string& where) {
  check_keys(j, {"position", "levels", "dipoles", "omega0", "dipole", "cavity_radius"}, where);
  const auto pos = vec3(j.at("position"), where + ".position");
  const double radius = get_or(j, "cavity_radius", 0.0);
  if (j.contains("omega0")) {
    if (j.contains("levels") || j.contains("dipoles"))
      throw ConfigError(where + ": give either omega0/dipole or levels/dipoles");
    return AtomSpec::two_level(pos, j.at("omega0").get<double>(),
                               vec3(require<json>(j, "dipole", where), where + ".dipole"), radius);
  }
  AtomSpec a;
  a.position = pos;
  a.cavity_radius = radius;
  a.levels = require<std::vector<double>>(j, "levels", where);
  const json& d = require<json>(j, "dipoles", where);
  if (!d.is_array()) throw ConfigError(where + ".dipoles: expected a matrix");
  for (std::size_t k = 0; k < d.size(); ++k) {
    std::vector<std::array<double, 3>> row;
    for (std::size_t l = 0; l < d[k].size(); ++l)
      row.push_back(vec3(d[k][l], where + ".dipoles"));
    a.dipoles.push_back(std::move(row));
  }
  return a;
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::decompose: return "decompose";
    case Task::modes: return "modes";
    case Task::verify: return "verify";
    case Task::ldos: return "ldos";
    case Task::rate: return "rate";
    case Task::cavity_factor: return "cavity-factor";
  }
  return "?";
}

json descriptor_to_json(const MediumDescriptor& d) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Homogeneous>) {
          return {{"kind", "homogeneous"}, {"eps", s.eps}};
        } else if constexpr (std::is_same_v<T, SlabStack>) {
          json layers = json::array();
          for (const auto& l : s.layers) layers.push_back({{"thickness", l.thickness}, {"eps", l.eps}});
          return {{"kind", "slab_stack"}, {"axis", s.axis}, {"layers", layers}};
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return {{"kind", "sphere"},  {"center", s.center},   {"radius", s.radius},
                  {"eps_in", s.eps_in}, {"eps_out", s.eps_out}};
        } else if constexpr (std::is_same_v<T, RandomSmooth>) {
          return {{"kind", "random_smooth"}, {"eps_min", s.eps_min}, {"eps_max", s.eps_max},
                  {"seed", s.seed},           {"harmonics", s.harmonics}};
        } else {
          return {{"kind", "empty_cavity"},
                  {"host", descriptor_to_json(*s.host)},
                  {"centers", s.centers},
                  {"radius", s.radius}};
        }
      },
      d.shape);
}

MediumDescriptor descriptor_from_json(const json& j) {
  const std::string where = "medium";
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const auto kind = require<std::string>(j, "kind", where);
  if (kind == "homogeneous") {
    check_keys(j, {"kind", "eps"}, where);
    return {Homogeneous{require<double>(j, "eps", where)}};
  }
  if (kind == "slab_stack") {
    check_keys(j, {"kind", "axis", "layers"}, where);
    SlabStack s;
    s.axis = get_or(j, "axis", 0);
    for (const auto& l : require<json>(j, "layers", where)) {
      check_keys(l, {"thickness", "eps"}, where + ".layers");
      s.layers.push_back({require<double>(l, "thickness", where), require<double>(l, "eps", where)});
    }
    return {s};
  }
  if (kind == "sphere") {
    check_keys(j, {"kind", "center", "radius", "eps_in", "eps_out"}, where);
    return {Sphere{vec3(require<json>(j, "center", where), where + ".center"),
                   require<double>(j, "radius", where), get_or(j, "eps_in", 1.0),
                   get_or(j, "eps_out", 1.0)}};
  }
  if (kind == "random_smooth") {
    check_keys(j, {"kind", "eps_min", "eps_max", "seed", "harmonics"}, where);
    return {RandomSmooth{get_or(j, "eps_min", 1.0), get_or(j, "eps_max", 4.0),
                         get_or<std::uint64_t>(j, "seed", 1), get_or(j, "harmonics", 3)}};
  }
  if (kind == "empty_cavity") {
    check_keys(j, {"kind", "host", "centers", "radius"}, where);
    EmptyCavity c;
    c.host = std::make_shared<const MediumDescriptor>(descriptor_from_json(require<json>(j, "host", where)));
    for (const auto& p : require<json>(j, "centers", where)) c.centers.push_back(vec3(p, where + ".centers"));
    c.radius = require<double>(j, "radius", where);
    return {c};
  }
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    check_keys(j, {"grid", "medium", "mu", "variant", "solver", "modes", "atoms", "ldos", "rate",
                   "cavity_factor", "tasks", "output", "seed"},
               "config");

    const json& g = require<json>(j, "grid", "config");
    check_keys(g, {"dims", "spacing"}, "grid");
    const auto dims = require<std::array<int, 3>>(g, "dims", "grid");
    cfg.grid = Grid(dims, get_or(g, "spacing", 1.0));

    cfg.medium = descriptor_from_json(require<json>(j, "medium", "config"));
    validate(cfg.medium, cfg.grid);
    if (j.contains("mu")) {
      cfg.mu = descriptor_from_json(j.at("mu"));
      validate(*cfg.mu, cfg.grid);
      cfg.variant = OperatorVariant::magnetic;
    }
    if (j.contains("variant")) {
      const auto v = j.at("variant").get<std::string>();
      if (v == "nonmagnetic")
        cfg.variant = OperatorVariant::nonmagnetic;
      else if (v == "magnetic")
        cfg.variant = OperatorVariant::magnetic;
      else
        throw ConfigError("variant must be 'nonmagnetic' or 'magnetic'");
    }

    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.solver.seed = cfg.seed;
    if (j.contains("solver")) {
      const json& s = j.at("solver");
      check_keys(s, {"tol", "poisson_tol", "max_iterations", "guard", "cluster_tol"}, "solver");
      cfg.solver.tol = get_or(s, "tol", cfg.solver.tol);
      cfg.solver.poisson_tol = get_or(s, "poisson_tol", cfg.solver.poisson_tol);
      cfg.solver.max_iterations = get_or(s, "max_iterations", cfg.solver.max_iterations);
      cfg.solver.guard = get_or(s, "guard", cfg.solver.guard);
      cfg.solver.cluster_tol = get_or(s, "cluster_tol", cfg.solver.cluster_tol);
      cfg.poisson_tol = get_or(s, "poisson_tol", cfg.poisson_tol);
      if (!(cfg.solver.tol > 0.0) || !(cfg.poisson_tol > 0.0) || !(cfg.solver.cluster_tol > 0.0))
        throw ConfigError("solver tolerances must be positive");
    }

    if (j.contains("modes")) {
      const json& m = j.at("modes");
      check_keys(m, {"count", "bank_file", "input_bank"}, "modes");
      cfg.mode_count = get_or(m, "count", 0);
      cfg.bank_file = get_or<std::string>(m, "bank_file", cfg.bank_file);
      if (m.contains("input_bank")) {
        std::filesystem::path p = m.at("input_bank").get<std::string>();
        cfg.input_bank = p.is_absolute() ? p : base_dir / p;
      }
    }

    if (j.contains("atoms")) {
      const json& a = j.at("atoms");
      if (!a.is_array()) throw ConfigError("atoms: expected an array");
      for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string where = "atoms[" + std::to_string(i) + "]";
        cfg.atoms.push_back(parse_atom(a[i], where));
        try {
          cfg.atoms.back().validate(cfg.grid);
        } catch (const ContractError& e) {
          throw ConfigError(where + ": " + e.what());
        }
      }
    }

    if (j.contains("ldos")) {
      const json& l = j.at("ldos");
      check_keys(l, {"position", "orientation", "omega_min", "omega_max", "samples", "eta"}, "ldos");
      LdosSpec s;
      s.position = vec3(require<json>(l, "position", "ldos"), "ldos.position");
      if (l.contains("orientation")) s.orientation = vec3(l.at("orientation"), "ldos.orientation");
      s.omega_min = require<double>(l, "omega_min", "ldos");
      s.omega_max = require<double>(l, "omega_max", "ldos");
      s.samples = get_or(l, "samples", s.samples);
      s.eta = get_or(l, "eta", 0.0);
      if (!(s.omega_max > s.omega_min) || s.samples < 2)
        throw ConfigError("ldos: need omega_max > omega_min and at least 2 samples");
      cfg.ldos = s;
    }

    if (j.contains("rate")) {
      const json& r = j.at("rate");
      check_keys(r, {"atom", "transition", "eta", "local_field", "cavity"}, "rate");
      RateSpec s;
      s.atom = get_or<std::size_t>(r, "atom", 0);
      if (r.contains("transition")) {
        const auto t = r.at("transition").get<std::array<std::size_t, 2>>();
        s.upper = t[0];
        s.lower = t[1];
      }
      s.eta = get_or(r, "eta", 0.0);
      s.local_field = get_or(r, "local_field", false);
      if (r.contains("cavity")) {
        const json& c = r.at("cavity");
        check_keys(c, {"grid_cells", "radius_cells", "tol"}, "rate.cavity");
        s.cavity.grid_cells = get_or(c, "grid_cells", s.cavity.grid_cells);
        s.cavity.radius_cells = get_or(c, "radius_cells", s.cavity.radius_cells);
        s.cavity.tol = get_or(c, "tol", s.cavity.tol);
      }
      if (s.atom >= cfg.atoms.size()) throw ConfigError("rate.atom refers to a missing atom");
      const auto& atom = cfg.atoms[s.atom];
      if (s.upper >= atom.levels.size() || s.lower >= atom.levels.size())
        throw ConfigError("rate.transition refers to a missing level");
      if (!(atom.levels[s.upper] > atom.levels[s.lower]))
        throw ConfigError("rate.transition must go from a higher to a lower level");
      cfg.rate = s;
    }

    if (j.contains("cavity_factor")) {
      const json& c = j.at("cavity_factor");
      check_keys(c, {"eps", "grid_cells", "radius_cells", "tol"}, "cavity_factor");
      auto& s = cfg.cavity_factor;
      s.eps = get_or(c, "eps", s.eps);
      s.grid_cells = get_or(c, "grid_cells", s.grid_cells);
      s.radius_cells = get_or(c, "radius_cells", s.radius_cells);
      s.tol = get_or(c, "tol", s.tol);
    }

    for (const auto& t : require<std::vector<std::string>>(j, "tasks", "config"))
      cfg.tasks.push_back(parse_task(t));
    if (cfg.tasks.empty()) throw ConfigError("tasks: at least one task is required");

    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, {"dir"}, "output");
      std::filesystem::path p = get_or<std::string>(o, "dir", ".");
      cfg.out_dir = p.is_absolute() ? p : base_dir / p;
    } else {
      cfg.out_dir = base_dir;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ContractError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Feasibility of the task list.
  bool have_bank = cfg.input_bank.has_value();
  for (Task t : cfg.tasks) {
    if (t == Task::modes && !cfg.input_bank) {
      if (cfg.mode_count < 1) throw ConfigError("modes.count must be >= 1 for the modes task");
      const auto limit = max_nonzero_modes(cfg.grid);
      if (static_cast<std::size_t>(cfg.mode_count) > limit)
        throw ConfigError("modes.count = " + std::to_string(cfg.mode_count) +
                          " exceeds the " + std::to_string(limit) +
                          " nonzero transverse modes this grid supports");
      have_bank = true;
    }
    if ((t == Task::ldos || t == Task::rate) && !have_bank)
      throw ConfigError("task '" + to_string(t) + "' needs a mode bank: list 'modes' earlier or set modes.input_bank");
    if (t == Task::ldos && !cfg.ldos) throw ConfigError("task 'ldos' needs an 'ldos' section");
    if (t == Task::rate && !cfg.rate) throw ConfigError("task 'rate' needs a 'rate' section");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace mqed
