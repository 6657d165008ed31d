#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace bsa {

/// Raised for malformed or physically invalid configuration values. `field`
/// names the offending key so front ends can report it.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Physical constants of the elastic double pendulum. Defaults are the
/// published mechanical parameters; the center-of-mass offsets and the fixed
/// BSA stiffness are not published and default to l/2 and 100 N m/rad.
struct PendulumParams {
  double m1 = 5.0;
  double m2 = 4.6;
  double l1 = 0.34;
  double l2 = 0.34;
  double lc1 = 0.17;
  double lc2 = 0.17;
  double Jl1 = 0.0453;
  double Jl2 = 0.0492;
  double Js1 = 0.001;
  double Js2 = 0.001;
  double k1 = 100.0;
  double k2 = 100.0;
  double g = 9.81;

  /// Throws ConfigError on the first violated invariant.
  void validate() const;

  /// Applies a `key = value` override. Unknown keys throw ConfigError.
  void set(const std::string& key, double value);

  std::map<std::string, double> toMap() const;
};

/// Reads `key = value` lines (SI units, `#` comments) on top of the defaults.
PendulumParams loadParams(const std::filesystem::path& path);

}  // namespace bsa
