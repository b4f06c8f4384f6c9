// JSON configuration: schema validation with exhaustive error reporting,
// problem presets (cantilever / MBB) and a fully-resolved echo that
// reproduces the run when fed back.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "distopt/optimizer.hpp"

namespace distopt {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues(std::move(issues)) {}
  std::vector<std::string> issues;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& m : v) s += "\n  - " + m;
    return s;
  }
};

struct AppConfig {
  std::string problem = "cantilever";  // or "mbb"
  OptConfig opt;
  int traction_span_elements = 2;
  std::vector<double> sweep_gammas;
  std::string identify_profile_csv;  // input for the identify command
};

AppConfig parse_config(const nlohmann::json& doc);
AppConfig load_config(const std::string& path);

// every value resolved and explicit; parse_config(config_echo(c)) == c
nlohmann::json config_echo(const AppConfig& config);

}  // namespace distopt
