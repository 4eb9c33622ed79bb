#include "nscbf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace nscbf {

namespace {

struct RawValue {
  std::string value;
  int line = 0;
  std::string origin;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string normalize_key(std::string key) {
  key = trim(key);
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\''))) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

class Resolver {
 public:
  Resolver(const std::string& key, const RawValue& raw) : key_(key), raw_(raw) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(key_, raw_.line, raw_.origin + ": key '" + key_ + "': " + message);
  }

  double real() const {
    const std::string v = trim(raw_.value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || !std::isfinite(out)) {
      fail("expected a real number, got '" + raw_.value + "'");
    }
    return out;
  }

  double positive() const {
    const double v = real();
    if (!(v > 0.0)) fail("must be positive, got " + trim(raw_.value));
    return v;
  }

  template <class Int>
  Int integer(Int min_value) const {
    const std::string v = trim(raw_.value);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      fail("expected an integer, got '" + raw_.value + "'");
    }
    if (out < static_cast<long long>(min_value)) {
      fail("must be >= " + std::to_string(min_value) + ", got " + v);
    }
    return static_cast<Int>(out);
  }

  std::uint64_t seed() const {
    const std::string v = trim(raw_.value);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      fail("expected a non-negative integer, got '" + raw_.value + "'");
    }
    return out;
  }

  bool boolean() const {
    std::string v = trim(raw_.value);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail("expected a boolean, got '" + raw_.value + "'");
  }

  std::vector<double> vector() const {
    std::string v = trim(raw_.value);
    if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      double d = 0.0;
      const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
      if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(d)) {
        fail("expected a comma-separated list of reals, got '" + raw_.value + "'");
      }
      out.push_back(d);
    }
    if (out.empty()) fail("empty vector");
    return out;
  }

  std::string string() const { return unquote(trim(raw_.value)); }

 private:
  std::string key_;
  const RawValue& raw_;
};

void apply(RunConfig& c, const std::string& key, const RawValue& raw,
           std::optional<double>& horizon, std::optional<double>& kp, bool& x0_set) {
  const Resolver r(key, raw);
  if (key == "scenario") {
    const std::string v = r.string();
    if (v == "single-boolean") {
      c.scenario = ScenarioKind::SingleBoolean;
    } else if (v == "multi-swap") {
      c.scenario = ScenarioKind::MultiSwap;
    } else {
      r.fail("expected 'single-boolean' or 'multi-swap', got '" + v + "'");
    }
  } else if (key == "trials") {
    c.trials = r.integer<std::size_t>(1);
  } else if (key == "dt") {
    c.dt = r.positive();
  } else if (key == "horizon") {
    horizon = r.positive();
  } else if (key == "seed") {
    c.seed = r.seed();
  } else if (key == "epsilon") {
    c.epsilon = r.real();
    if (c.epsilon < 0.0) r.fail("must be >= 0");
  } else if (key == "filter") {
    c.filter = r.boolean();
  } else if (key == "sigma") {
    c.sigma = r.positive();
  } else if (key == "n_agents") {
    c.n_agents = r.integer<int>(2);
  } else if (key == "collision_radius") {
    c.collision_radius = r.positive();
  } else if (key == "kp") {
    kp = r.positive();
  } else if (key == "x0") {
    c.x0 = r.vector();
    x0_set = true;
  } else if (key == "slack_penalty") {
    c.slack_penalty = r.positive();
  } else if (key == "output_dir") {
    c.output_dir = r.string();
    if (c.output_dir.empty()) r.fail("must not be empty");
  } else if (key == "threads") {
    c.threads = r.integer<unsigned>(0);
  } else if (key == "csv_limit") {
    c.csv_limit = r.integer<std::size_t>(0);
  } else {
    throw ConfigError(key, raw.line, raw.origin + ": unknown key '" + key + "'");
  }
}

void validate(const RunConfig& c) {
  if (!(c.horizon > c.dt)) {
    throw ConfigError("horizon", 0, "key 'horizon': must exceed dt");
  }
  const std::size_t n = c.scenario == ScenarioKind::SingleBoolean
                            ? 2
                            : static_cast<std::size_t>(2 * c.n_agents);
  if (c.x0.size() != n) {
    throw ConfigError("x0", 0, "key 'x0': expected " + std::to_string(n) + " entries, got " +
                                   std::to_string(c.x0.size()));
  }
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string to_string(ScenarioKind kind) {
  return kind == ScenarioKind::SingleBoolean ? "single-boolean" : "multi-swap";
}

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      key_(std::move(key)),
      line_(line) {}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "scenario", "trials",   "dt", "horizon",       "seed",       "epsilon",
      "filter",   "sigma",    "n_agents", "collision_radius", "kp", "x0",
      "slack_penalty", "output_dir", "threads", "csv_limit"};
  return keys;
}

RunConfig parse_config(std::string_view text, const std::vector<ConfigOverride>& overrides,
                       std::optional<std::string> env_seed) {
  std::vector<std::pair<std::string, RawValue>> layers;
  if (env_seed) layers.push_back({"seed", {*env_seed, 0, "NSCBF_SEED"}});

  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(trim(line), line_no,
                        "config: expected 'key = value', got '" + trim(line) + "'");
    }
    const std::string key = normalize_key(line.substr(0, eq));
    if (auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
      throw ConfigError(key, line_no,
                        "config: key '" + key + "' repeated (first on line " +
                            std::to_string(it->second) + ")");
    }
    layers.push_back({key, {trim(line.substr(eq + 1)), line_no, "config"}});
  }
  for (const auto& o : overrides) {
    const std::string key = normalize_key(o.key);
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    layers.push_back({key, {o.value, 0, "flag --" + flag}});
  }

  RunConfig config;
  std::optional<double> horizon, kp;
  bool x0_set = false;
  // The scenario decides defaults, so resolve it before everything else.
  for (const auto& [key, raw] : layers) {
    if (key == "scenario") apply(config, key, raw, horizon, kp, x0_set);
  }
  for (const auto& [key, raw] : layers) {
    if (key != "scenario") apply(config, key, raw, horizon, kp, x0_set);
  }

  if (config.scenario == ScenarioKind::SingleBoolean) {
    const SingleAgentOptions d;
    config.horizon = horizon.value_or(d.horizon);
    config.kp = kp.value_or(d.kp);
    if (!x0_set) config.x0 = {d.x0[0], d.x0[1]};
  } else {
    const SwapOptions d;
    config.horizon = horizon.value_or(d.horizon);
    config.kp = kp.value_or(d.kp);
    if (!x0_set) {
      SwapOptions o;
      o.n_agents = config.n_agents;
      o.collision_radius = config.collision_radius;
      try {
        config.x0 = to_std(multi_agent_swap(o).x0);
      } catch (const Error& e) {
        throw ConfigError("n_agents", 0, std::string("key 'n_agents': ") + e.what());
      }
    }
  }
  validate(config);
  return config;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["scenario"] = to_string(c.scenario);
  j["trials"] = c.trials;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["seed"] = c.seed;
  j["epsilon"] = c.epsilon;
  j["filter"] = c.filter;
  j["sigma"] = c.sigma;
  j["n_agents"] = c.n_agents;
  j["collision_radius"] = c.collision_radius;
  j["kp"] = c.kp;
  j["x0"] = c.x0;
  j["slack_penalty"] = c.slack_penalty ? nlohmann::json(*c.slack_penalty) : nlohmann::json();
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  j["csv_limit"] = c.csv_limit;
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("", 0, "config JSON must be an object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
        throw ConfigError(key, 0, "config JSON: unknown key '" + key + "'");
      }
    }
    c.scenario = j.at("scenario").get<std::string>() == "multi-swap" ? ScenarioKind::MultiSwap
                                                                     : ScenarioKind::SingleBoolean;
    c.trials = j.at("trials").get<std::size_t>();
    c.dt = j.at("dt").get<double>();
    c.horizon = j.at("horizon").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epsilon = j.at("epsilon").get<double>();
    c.filter = j.at("filter").get<bool>();
    c.sigma = j.at("sigma").get<double>();
    c.n_agents = j.at("n_agents").get<int>();
    c.collision_radius = j.at("collision_radius").get<double>();
    c.kp = j.at("kp").get<double>();
    c.x0 = j.at("x0").get<std::vector<double>>();
    if (!j.at("slack_penalty").is_null()) c.slack_penalty = j.at("slack_penalty").get<double>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.threads = j.at("threads").get<unsigned>();
    c.csv_limit = j.at("csv_limit").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("", 0, std::string("config JSON: ") + e.what());
  }
  validate(c);
  return c;
}

Scenario build_scenario(const RunConfig& c) {
  Scenario s = [&] {
    if (c.scenario == ScenarioKind::SingleBoolean) {
      SingleAgentOptions o;
      o.sigma = c.sigma;
      o.kp = c.kp;
      o.horizon = c.horizon;
      o.x0 = Eigen::Vector2d(c.x0.at(0), c.x0.at(1));
      return single_agent_boolean(o);
    }
    SwapOptions o;
    o.n_agents = c.n_agents;
    o.collision_radius = c.collision_radius;
    o.sigma = c.sigma;
    o.kp = c.kp;
    o.horizon = c.horizon;
    return multi_agent_swap(o);
  }();
  if (c.scenario == ScenarioKind::MultiSwap) {
    s.x0 = Eigen::Map<const Vector>(c.x0.data(), static_cast<Eigen::Index>(c.x0.size()));
    if (!(s.tree.eval(s.x0) > 0.0)) {
      throw ConfigError("x0", 0, "key 'x0': initial state is not strictly safe");
    }
  }
  return s;
}

TrialOptions trial_options(const RunConfig& c) {
  TrialOptions o;
  o.n_trials = c.trials;
  o.master_seed = c.seed;
  o.dt = c.dt;
  o.epsilon = c.epsilon;
  o.filter_enabled = c.filter;
  o.slack_penalty = c.slack_penalty;
  o.horizon = c.horizon;
  o.threads = c.threads;
  return o;
}

}  // namespace nscbf
