#include "bsa/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace bsa {

std::string toString(ExperimentId id) {
  switch (id) {
    case ExperimentId::Sim1Bsa: return "sim1-bsa";
    case ExperimentId::Sim1Vsa: return "sim1-vsa";
    case ExperimentId::Sim2Bsa: return "sim2-bsa";
    case ExperimentId::Sim2Vsa: return "sim2-vsa";
    case ExperimentId::Sim3Friction: return "sim3-friction";
    case ExperimentId::Sweep: return "sweep";
  }
  return "?";
}

ExperimentId parseExperimentId(const std::string& s) {
  for (auto id : {ExperimentId::Sim1Bsa, ExperimentId::Sim1Vsa, ExperimentId::Sim2Bsa, ExperimentId::Sim2Vsa,
                  ExperimentId::Sim3Friction, ExperimentId::Sweep}) {
    if (toString(id) == s) return id;
  }
  throw ConfigError("experiment", "unknown experiment '" + s + "'");
}

namespace {

// Shortest text that round-trips.
std::string formatDouble(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parseDouble(const std::string& key, const std::string& text) {
  std::istringstream ss(text);
  double v = 0.0;
  if (!(ss >> v) || !(ss >> std::ws).eof()) throw ConfigError(key, "not a number: '" + text + "'");
  if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
  return v;
}

long long parseInteger(const std::string& key, const std::string& text) {
  std::istringstream ss(text);
  long long v = 0;
  if (!(ss >> v) || !(ss >> std::ws).eof()) throw ConfigError(key, "not an integer: '" + text + "'");
  return v;
}

bool parseBool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key, "not a boolean: '" + text + "'");
}

std::vector<std::string> splitList(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
  }
  return out;
}

template <typename Parse>
auto parseList(const std::string& key, const std::string& text, Parse parse) {
  std::vector<decltype(parse(key, text))> out;
  for (const auto& item : splitList(text)) {
    if (item.empty()) throw ConfigError(key, "empty list element");
    out.push_back(parse(key, item));
  }
  return out;
}

template <typename T, typename Format>
std::string joinList(const std::vector<T>& v, Format format) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format(v[i]);
  return s;
}

std::string pointsName(CollocationPoints p) { return p == CollocationPoints::Legendre ? "legendre" : "radau"; }
std::string methodName(IntegrationMethod m) { return m == IntegrationMethod::Rk4 ? "rk4" : "rk45"; }
std::string guessName(GuessStrategy g) { return g == GuessStrategy::ForwardSim ? "forward-sim" : "zero-hold"; }

template <typename F>
auto rethrowAs(const std::string& key, F f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

struct Entry {
  std::string key;  // "section.name" or "name" for top level
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

Entry real(std::string key, std::string help, double ExperimentConfig::*field) {
  return {key, std::move(help),
          [field, key](ExperimentConfig& c, const std::string& v) { c.*field = parseDouble(key, v); },
          [field](const ExperimentConfig& c) { return formatDouble(c.*field); }};
}

template <typename S>
Entry real(std::string key, std::string help, S ExperimentConfig::*section, double S::*field) {
  return {key, std::move(help),
          [section, field, key](ExperimentConfig& c, const std::string& v) { c.*section.*field = parseDouble(key, v); },
          [section, field](const ExperimentConfig& c) { return formatDouble(c.*section.*field); }};
}

template <typename S>
Entry integer(std::string key, std::string help, S ExperimentConfig::*section, int S::*field) {
  return {key, std::move(help),
          [section, field, key](ExperimentConfig& c, const std::string& v) {
            const long long n = parseInteger(key, v);
            if (n < -1000000000LL || n > 1000000000LL) throw ConfigError(key, "out of range");
            c.*section.*field = static_cast<int>(n);
          },
          [section, field](const ExperimentConfig& c) { return std::to_string(c.*section.*field); }};
}

template <typename S>
Entry boolean(std::string key, std::string help, S ExperimentConfig::*section, bool S::*field) {
  return {key, std::move(help),
          [section, field, key](ExperimentConfig& c, const std::string& v) { c.*section.*field = parseBool(key, v); },
          [section, field](const ExperimentConfig& c) { return std::string(c.*section.*field ? "true" : "false"); }};
}

Entry pendulum(const std::string& name, const std::string& help) {
  const std::string key = "pendulum." + name;
  return {key, help,
          [name, key](ExperimentConfig& c, const std::string& v) { c.pendulum.set(name, parseDouble(key, v)); },
          [name](const ExperimentConfig& c) { return formatDouble(c.pendulum.toMap().at(name)); }};
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"schema_version", "config schema version",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.schema_version = static_cast<int>(parseInteger("schema_version", v));
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.schema_version); }});
    e.push_back({"experiment", "sim1-bsa | sim1-vsa | sim2-bsa | sim2-vsa | sim3-friction | sweep",
                 [](ExperimentConfig& c, const std::string& v) { c.experiment = parseExperimentId(v); },
                 [](const ExperimentConfig& c) { return toString(c.experiment); }});
    e.push_back({"seed", "seed of the multistart perturbations",
                 [](ExperimentConfig& c, const std::string& v) {
                   const long long n = parseInteger("seed", v);
                   if (n < 0) throw ConfigError("seed", "must be nonnegative");
                   c.seed = static_cast<std::uint64_t>(n);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    e.push_back({"output", "output directory (overridden by --out)",
                 [](ExperimentConfig& c, const std::string& v) { c.output = v; },
                 [](const ExperimentConfig& c) { return c.output; }});

    for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"m1", "link 1 mass [kg]"},
             {"m2", "link 2 mass [kg]"},
             {"l1", "link 1 length [m]"},
             {"l2", "link 2 length [m]"},
             {"lc1", "link 1 center of mass offset [m]"},
             {"lc2", "link 2 center of mass offset [m]"},
             {"Jl1", "link 1 inertia about its center of mass [kg m^2]"},
             {"Jl2", "link 2 inertia about its center of mass [kg m^2]"},
             {"Js1", "spring output inertia 1 [kg m^2]"},
             {"Js2", "spring output inertia 2 [kg m^2]"},
             {"k1", "BSA spring stiffness 1 [N m/rad]"},
             {"k2", "BSA spring stiffness 2 [N m/rad]"},
             {"g", "gravity [m/s^2]"}}) {
      e.push_back(pendulum(name, help));
    }

    e.push_back(real("bounds.u_theta_max", "motor velocity bound [rad/s]", &ExperimentConfig::u_theta_max));
    e.push_back(real("bounds.k_min", "VSA stiffness lower bound [N m/rad]", &ExperimentConfig::vsa, &VsaLimits::k_min));
    e.push_back(real("bounds.k_max", "VSA stiffness upper bound [N m/rad]", &ExperimentConfig::vsa, &VsaLimits::k_max));
    e.push_back(
        real("bounds.u_k_max", "VSA stiffness rate bound [N m/rad/s]", &ExperimentConfig::vsa, &VsaLimits::u_k_max));

    e.push_back(real("ocp.horizon", "fixed final time [s]", &ExperimentConfig::horizon));
    e.push_back({"ocp.modes", "BSA mode sequence (1 DEC-DEC, 2 SEA-SEA, 3 DEC-SEA, 4 SEA-DEC)",
                 [](ExperimentConfig& c, const std::string& v) {
                   std::vector<int> modes;
                   for (long long m : parseList("ocp.modes", v, parseInteger)) modes.push_back(static_cast<int>(m));
                   c.ocp.modes = modes;
                 },
                 [](const ExperimentConfig& c) {
                   return joinList(c.ocp.modes, [](int m) { return std::to_string(m); });
                 }});
    e.push_back(integer("ocp.intervals", "collocation intervals per stage, 0 = experiment default",
                        &ExperimentConfig::ocp, &OcpSettings::intervals));
    e.push_back(integer("ocp.degree", "collocation polynomial degree", &ExperimentConfig::ocp, &OcpSettings::degree));
    e.push_back({"ocp.points", "legendre | radau",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.ocp.points = rethrowAs("ocp.points", [&] { return parseCollocationPoints(v); });
                 },
                 [](const ExperimentConfig& c) { return pointsName(c.ocp.points); }});
    e.push_back(real("ocp.min_stage_fraction", "lower bound of each stage duration as a fraction of the horizon",
                     &ExperimentConfig::ocp, &OcpSettings::min_stage_fraction));
    e.push_back(real("ocp.terminal_speed", "terminal end-link speed of the effort problems [m/s]",
                     &ExperimentConfig::ocp, &OcpSettings::terminal_speed));
    e.push_back(real("ocp.initial_stiffness", "VSA stiffness at t = 0 [N m/rad]", &ExperimentConfig::ocp,
                     &OcpSettings::initial_stiffness));
    e.push_back(boolean("ocp.free_initial_stiffness", "VSA: optimize the initial stiffness", &ExperimentConfig::ocp,
                        &OcpSettings::free_initial_stiffness));
    e.push_back(real("ocp.input_regularization", "weight of the normalized input effort in the velocity cost",
                     &ExperimentConfig::ocp, &OcpSettings::input_regularization));
    e.push_back(integer("ocp.starts", "number of multistart initial guesses", &ExperimentConfig::ocp,
                        &OcpSettings::starts));
    e.push_back({"ocp.guess", "forward-sim | zero-hold",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.ocp.guess = rethrowAs("ocp.guess", [&] { return parseGuessStrategy(v); });
                 },
                 [](const ExperimentConfig& c) { return guessName(c.ocp.guess); }});
    e.push_back(real("ocp.guess_perturbation", "relative random perturbation of guessed inputs",
                     &ExperimentConfig::ocp, &OcpSettings::guess_perturbation));

    e.push_back({"sweep.horizons", "comma-separated horizons [s]",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.horizons = parseList("sweep.horizons", v, parseDouble);
                 },
                 [](const ExperimentConfig& c) { return joinList(c.horizons, formatDouble); }});
    e.push_back({"sweep.model", "bsa | vsa",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.sweep_model = rethrowAs("sweep.model", [&] { return parseOcpModel(v); });
                 },
                 [](const ExperimentConfig& c) { return toString(c.sweep_model); }});

    e.push_back(real("clutch.m_max", "clutch torque capacity [N m]", &ExperimentConfig::clutch, &ClutchSettings::m_max));
    e.push_back(real("clutch.t_connect", "capacity ramp-up time [s]", &ExperimentConfig::clutch,
                     &ClutchSettings::t_connect));
    e.push_back(real("clutch.t_separate", "capacity ramp-down time [s]", &ExperimentConfig::clutch,
                     &ClutchSettings::t_separate));
    e.push_back(real("clutch.advance", "command lead before the ideal switch [s]", &ExperimentConfig::clutch,
                     &ClutchSettings::advance));
    e.push_back(real("clutch.static_ratio", "static over dynamic friction coefficient", &ExperimentConfig::clutch,
                     &ClutchSettings::static_ratio));

    e.push_back({"integrator.method", "rk4 | rk45",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.integrator.method = rethrowAs("integrator.method", [&] { return parseIntegrationMethod(v); });
                 },
                 [](const ExperimentConfig& c) { return methodName(c.integrator.method); }});
    e.push_back(real("integrator.dt", "fixed step / initial step [s]", &ExperimentConfig::integrator,
                     &IntegratorConfig::dt));
    e.push_back(real("integrator.rtol", "adaptive relative tolerance", &ExperimentConfig::integrator,
                     &IntegratorConfig::rtol));
    e.push_back(real("integrator.atol", "adaptive absolute tolerance", &ExperimentConfig::integrator,
                     &IntegratorConfig::atol));
    e.push_back(real("integrator.event_tolerance", "event localization tolerance [s]", &ExperimentConfig::integrator,
                     &IntegratorConfig::event_tolerance));

    e.push_back({"solver.name", "NLP solver",
                 [](ExperimentConfig& c, const std::string& v) { c.solver.name = v; },
                 [](const ExperimentConfig& c) { return c.solver.name; }});
    e.push_back(real("solver.tol", "optimality tolerance", &ExperimentConfig::solver, &SolverSettings::tol));
    e.push_back(real("solver.acceptable_tol", "acceptable optimality tolerance", &ExperimentConfig::solver,
                     &SolverSettings::acceptable_tol));
    e.push_back(integer("solver.max_iterations", "iteration limit", &ExperimentConfig::solver,
                        &SolverSettings::max_iterations));
    e.push_back(boolean("solver.verbose", "print the iteration log to stderr", &ExperimentConfig::solver,
                        &SolverSettings::verbose));
    return e;
  }();
  return entries;
}

const Entry* findEntry(const std::string& key) {
  for (const auto& e : registry()) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(ExperimentId id) {
  ExperimentConfig c;
  c.experiment = id;
  switch (id) {
    case ExperimentId::Sim1Bsa:
    case ExperimentId::Sim1Vsa:
    case ExperimentId::Sim3Friction:
      c.horizon = 0.2;
      break;
    case ExperimentId::Sim2Bsa:
    case ExperimentId::Sim2Vsa:
      c.horizon = 1.0;
      break;
    case ExperimentId::Sweep:
      c.horizon = 1.0;
      for (int i = 2; i <= 10; ++i) c.horizons.push_back(i / 10.0);
      break;
  }
  return c;
}

int ExperimentConfig::intervalsFor(OcpModel model) const {
  if (ocp.intervals > 0) return ocp.intervals;
  if (model == OcpModel::Bsa) return 20;
  return experiment == ExperimentId::Sim1Vsa ? 40 : 60;
}

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(schema_version) + " (expected " +
                                            std::to_string(kConfigSchemaVersion) + ")");
  }
  try {
    pendulum.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("pendulum." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
  };
  positive("bounds.u_theta_max", u_theta_max);
  positive("bounds.u_k_max", vsa.u_k_max);
  if (!(vsa.k_min >= 0.0)) throw ConfigError("bounds.k_min", "must be nonnegative");
  if (!(vsa.k_max > vsa.k_min)) throw ConfigError("bounds.k_max", "must exceed bounds.k_min");
  positive("ocp.horizon", horizon);
  if (ocp.modes.empty()) throw ConfigError("ocp.modes", "needs at least one mode");
  for (int m : ocp.modes) {
    if (m < 1 || m > 4) throw ConfigError("ocp.modes", "mode " + std::to_string(m) + " is not in 1..4");
  }
  if (ocp.intervals < 0) throw ConfigError("ocp.intervals", "must be nonnegative");
  if (ocp.degree < 1 || ocp.degree > 9) throw ConfigError("ocp.degree", "must be in 1..9");
  if (!(ocp.min_stage_fraction > 0.0) || ocp.min_stage_fraction * static_cast<double>(ocp.modes.size()) >= 1.0) {
    throw ConfigError("ocp.min_stage_fraction", "must be positive and leave room for all stages");
  }
  positive("ocp.terminal_speed", ocp.terminal_speed);
  if (ocp.initial_stiffness < vsa.k_min || ocp.initial_stiffness > vsa.k_max) {
    throw ConfigError("ocp.initial_stiffness", "must lie within the stiffness bounds");
  }
  if (!(ocp.input_regularization >= 0.0)) throw ConfigError("ocp.input_regularization", "must be nonnegative");
  if (ocp.starts < 1) throw ConfigError("ocp.starts", "must be at least 1");
  if (!(ocp.guess_perturbation >= 0.0)) throw ConfigError("ocp.guess_perturbation", "must be nonnegative");
  if (experiment == ExperimentId::Sweep) {
    if (horizons.empty()) throw ConfigError("sweep.horizons", "needs at least one horizon");
    for (double h : horizons) {
      if (!(h > 0.0)) throw ConfigError("sweep.horizons", "horizons must be positive");
    }
  }
  positive("clutch.m_max", clutch.m_max);
  if (!(clutch.t_connect >= 0.0)) throw ConfigError("clutch.t_connect", "must be nonnegative");
  if (!(clutch.t_separate >= 0.0)) throw ConfigError("clutch.t_separate", "must be nonnegative");
  if (!(clutch.advance >= 0.0)) throw ConfigError("clutch.advance", "must be nonnegative");
  if (!(clutch.static_ratio >= 1.0)) throw ConfigError("clutch.static_ratio", "must be at least 1");
  rethrowAs("integrator", [&] {
    integrator.validate();
    return 0;
  });
  rethrowAs("solver.name", [&] { return nlp::makeSolver(solver.name); });
  positive("solver.tol", solver.tol);
  if (!(solver.acceptable_tol >= solver.tol)) throw ConfigError("solver.acceptable_tol", "must be >= solver.tol");
  if (solver.max_iterations < 1) throw ConfigError("solver.max_iterations", "must be at least 1");
}

std::string ExperimentConfig::canonical() const {
  std::string s;
  for (const auto& e : registry()) {
    if (e.key == "output") continue;  // where results go does not change them
    s += e.key + " = " + e.get(*this) + "\n";
  }
  return s;
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parseConfig(const std::string& text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()), e.message());
  }

  // Flatten to "section.key" (top-level keys keep their bare name).
  std::vector<std::pair<std::string, std::string>> items;
  std::set<std::string> seen;
  for (const auto& [name, node] : tree) {
    bool known_section = false;
    for (const auto& e : registry()) known_section |= e.key.rfind(name + ".", 0) == 0;
    if (node.empty()) {
      // An empty [section] parses like a bare key without value.
      if (known_section && node.data().empty() && !findEntry(name)) continue;
      items.emplace_back(name, node.data());
      continue;
    }
    if (!known_section) throw ConfigError(name, "unknown section");
    for (const auto& [key, leaf] : node) items.emplace_back(name + "." + key, leaf.data());
  }
  for (const auto& [key, value] : items) {
    if (!findEntry(key)) throw ConfigError(key, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
  }

  auto value_of = [&](const std::string& key) -> const std::string* {
    for (const auto& [k, v] : items) {
      if (k == key) return &v;
    }
    return nullptr;
  };
  const std::string* version = value_of("schema_version");
  if (!version) throw ConfigError("schema_version", "missing; expected schema_version = 1");
  const std::string* experiment = value_of("experiment");
  if (!experiment) throw ConfigError("experiment", "missing");

  ExperimentConfig cfg = ExperimentConfig::defaults(parseExperimentId(*experiment));
  for (const auto& [key, value] : items) {
    if (value.empty() && key != "output") throw ConfigError(key, "empty value");
    findEntry(key)->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig loadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseConfig(ss.str(), path.string());
}

std::string configTemplate(ExperimentId id) { return toIni(ExperimentConfig::defaults(id)); }

std::string toIni(const ExperimentConfig& c, bool comments) {
  std::string s;
  std::string section;
  for (const auto& e : registry()) {
    const auto dot = e.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : e.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? e.key : e.key.substr(dot + 1);
    if (sec != section) {
      s += "\n[" + sec + "]\n";
      section = sec;
    }
    const std::string value = e.get(c);
    if (comments) s += "# " + e.help + "\n";
    if (value.empty()) s += "# ";
    s += name + " = " + value + "\n";
  }
  return s;
}

}  // namespace bsa
