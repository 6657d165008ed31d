#include "bsa/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bsa {

namespace {

void requirePositive(const char* name, double v) {
  if (!(std::isfinite(v) && v > 0.0)) {
    throw ConfigError(name, "must be a finite positive number, got " + std::to_string(v));
  }
}

void requireNonNegative(const char* name, double v) {
  if (!(std::isfinite(v) && v >= 0.0)) {
    throw ConfigError(name, "must be a finite nonnegative number, got " + std::to_string(v));
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void PendulumParams::validate() const {
  requirePositive("m1", m1);
  requirePositive("m2", m2);
  requirePositive("l1", l1);
  requirePositive("l2", l2);
  requirePositive("lc1", lc1);
  requirePositive("lc2", lc2);
  requirePositive("Jl1", Jl1);
  requirePositive("Jl2", Jl2);
  requirePositive("Js1", Js1);
  requirePositive("Js2", Js2);
  requireNonNegative("k1", k1);
  requireNonNegative("k2", k2);
  requireNonNegative("g", g);
  if (lc1 > l1) throw ConfigError("lc1", "center of mass must lie on the link (lc1 <= l1)");
  if (lc2 > l2) throw ConfigError("lc2", "center of mass must lie on the link (lc2 <= l2)");
}

void PendulumParams::set(const std::string& key, double value) {
  static const std::map<std::string, double PendulumParams::*> fields = {
      {"m1", &PendulumParams::m1},   {"m2", &PendulumParams::m2},   {"l1", &PendulumParams::l1},
      {"l2", &PendulumParams::l2},   {"lc1", &PendulumParams::lc1}, {"lc2", &PendulumParams::lc2},
      {"Jl1", &PendulumParams::Jl1}, {"Jl2", &PendulumParams::Jl2}, {"Js1", &PendulumParams::Js1},
      {"Js2", &PendulumParams::Js2}, {"k1", &PendulumParams::k1},   {"k2", &PendulumParams::k2},
      {"g", &PendulumParams::g}};
  const auto it = fields.find(key);
  if (it == fields.end()) throw ConfigError(key, "unknown pendulum parameter");
  this->*(it->second) = value;
}

std::map<std::string, double> PendulumParams::toMap() const {
  return {{"m1", m1},   {"m2", m2},   {"l1", l1},   {"l2", l2}, {"lc1", lc1},
          {"lc2", lc2}, {"Jl1", Jl1}, {"Jl2", Jl2}, {"Js1", Js1}, {"Js2", Js2},
          {"k1", k1},   {"k2", k2},   {"g", g}};
}

PendulumParams loadParams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open parameter file");
  PendulumParams params;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno), "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string text = trim(line.substr(eq + 1));
    std::istringstream ss(text);
    double value = 0.0;
    if (!(ss >> value) || !(ss >> std::ws).eof()) throw ConfigError(key, "not a number: '" + text + "'");
    params.set(key, value);
  }
  params.validate();
  return params;
}

}  // namespace bsa
