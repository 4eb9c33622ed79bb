// Command-line front end: nscbf_sim [--config FILE] [--<key> VALUE ...]

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "nscbf/artifacts.hpp"
#include "nscbf/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo simulator for non-smooth stochastic CBF safety filters"};
  app.set_config();  // keep CLI11's own --config handling out of the way

  std::string config_path;
  bool print_config = false;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  std::map<std::string, std::string> values;
  for (const auto& key : nscbf::config_keys()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    app.add_option("--" + flag, values[key], "overrides '" + key + "'");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : nscbf::kExitConfig;
  }

  std::vector<nscbf::ConfigOverride> overrides;
  for (const auto& key : nscbf::config_keys()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (app.count("--" + flag) > 0) overrides.push_back({key, values[key]});
  }

  std::string text;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "config error: cannot read " << config_path << '\n';
      return nscbf::kExitConfig;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }

  std::optional<std::string> env_seed;
  if (const char* s = std::getenv("NSCBF_SEED")) env_seed = s;

  nscbf::RunConfig config;
  try {
    config = nscbf::parse_config(text, overrides, env_seed);
  } catch (const nscbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return nscbf::kExitConfig;
  }

  if (print_config) {
    std::cout << nscbf::config_to_json(config).dump(2) << '\n';
    return nscbf::kExitOk;
  }
  return nscbf::run(config, std::cerr);
}
