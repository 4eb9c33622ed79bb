#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nscbf/error.hpp"
#include "nscbf/montecarlo.hpp"
#include "nscbf/scenarios.hpp"

namespace nscbf {

enum class ScenarioKind { SingleBoolean, MultiSwap };

std::string to_string(ScenarioKind kind);

/// Fully resolved run configuration. `horizon`, `kp` and `x0` carry the
/// scenario defaults when not given explicitly.
struct RunConfig {
  ScenarioKind scenario = ScenarioKind::SingleBoolean;
  std::size_t trials = 500;
  double dt = 1e-3;
  double horizon = 10.0;
  std::uint64_t seed = 0;
  double epsilon = 0.05;
  bool filter = true;
  double sigma = 0.025;
  int n_agents = 6;
  double collision_radius = 0.1;
  double kp = 1.0;
  std::vector<double> x0;
  std::optional<double> slack_penalty;
  std::string output_dir = "nscbf_out";
  unsigned threads = 0;
  std::size_t csv_limit = 20;

  bool operator==(const RunConfig&) const = default;
};

/// Unknown key, malformed value or out-of-range value. `line` is the 1-based
/// line in the config file, 0 for flags and the environment.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, int line, const std::string& message);

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

struct ConfigOverride {
  std::string key;  // snake_case or kebab-case
  std::string value;
};

/// Every recognised key, in snake_case.
const std::vector<std::string>& config_keys();

/// Parses a flat `key = value` document ('#' starts a comment). Precedence,
/// lowest first: built-in defaults, `env_seed` (NSCBF_SEED), the document,
/// `overrides` (command-line flags).
RunConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides = {},
                       std::optional<std::string> env_seed = std::nullopt);

nlohmann::json config_to_json(const RunConfig& config);
/// Inverse of config_to_json; validates like parse_config.
RunConfig config_from_json(const nlohmann::json& j);

Scenario build_scenario(const RunConfig& config);
TrialOptions trial_options(const RunConfig& config);

}  // namespace nscbf
