#include "nscbf/artifacts.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#ifndef NSCBF_VERSION
#define NSCBF_VERSION "0.0.0"
#endif

namespace nscbf {

namespace fs = std::filesystem;

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const auto n = traj.states.front().size();
  const auto m = traj.controls.empty() ? 0 : traj.controls.front().size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= m; ++i) out << ",u" << i;
  out << ",h,active_leaves\n";

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << format_double(traj.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(traj.states[k][i]);
    for (Eigen::Index i = 0; i < m; ++i) {
      out << ',';
      if (k < traj.controls.size()) out << format_double(traj.controls[k][i]);
    }
    out << ',' << (k < traj.h_values.size() ? format_double(traj.h_values[k]) : "");
    out << ',';
    if (k < traj.active_leaves.size()) {
      const auto& leaves = traj.active_leaves[k];
      for (std::size_t j = 0; j < leaves.size(); ++j) out << (j ? ";" : "") << leaves[j];
    }
    out << '\n';
  }
}

nlohmann::json summary_to_json(const MonteCarloSummary& s, const RunConfig& config) {
  nlohmann::json j;
  j["artifact"] = "nscbf";
  j["version"] = NSCBF_VERSION;
  j["config"] = config_to_json(config);
  j["n_trials"] = s.n_trials;
  j["safety_rate"] = s.safety_rate;
  j["min_h"] = s.min_h;
  j["tv_control"] = s.tv_control;
  j["qp_time"] = {{"unit", "seconds"},      {"samples", s.qp_time.samples},
                  {"mean", s.qp_time.mean}, {"stddev", s.qp_time.stddev},
                  {"median", s.qp_time.median}, {"max", s.qp_time.max}};
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : s.failures) {
    failures.push_back({{"trial", f.trial}, {"step", f.step}, {"reason", f.reason}});
  }
  j["failures"] = {{"count", s.failures.size()}, {"trials", failures}};
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : s.trials) {
    trials.push_back({{"trial", t.index},
                      {"seed", t.seed},
                      {"failed", t.failed},
                      {"min_h", t.min_h},
                      {"tv_control", t.tv_control},
                      {"exit_events", t.exit_events},
                      {"max_slack", t.max_slack},
                      {"final_state", std::vector<double>(t.final_state.data(),
                                                          t.final_state.data() +
                                                              t.final_state.size())}});
  }
  j["trials"] = trials;
  return j;
}

namespace {

const std::array<const char*, 8> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

// Maps world coordinates into an SVG viewport with y pointing up.
struct Viewport {
  double x_min, x_max, y_min, y_max;
  double width, height, margin;

  double sx(double x) const { return margin + (x - x_min) / (x_max - x_min) * width; }
  double sy(double y) const { return margin + (y_max - y) / (y_max - y_min) * height; }
  double scale() const { return width / (x_max - x_min); }
};

std::string f(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const Viewport& vp,
                     const std::string& color, double width, double opacity) {
  std::ostringstream ss;
  ss << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
     << "\" stroke-opacity=\"" << opacity << "\" points=\"";
  for (const auto& [x, y] : pts) ss << f(vp.sx(x)) << ',' << f(vp.sy(y)) << ' ';
  ss << "\"/>\n";
  return ss.str();
}

std::string circle(const Viewport& vp, const Eigen::Vector2d& c, double r,
                   const std::string& stroke, const std::string& fill, double fill_opacity) {
  std::ostringstream ss;
  ss << "<circle cx=\"" << f(vp.sx(c.x())) << "\" cy=\"" << f(vp.sy(c.y())) << "\" r=\""
     << f(r * vp.scale()) << "\" stroke=\"" << stroke << "\" fill=\"" << fill
     << "\" fill-opacity=\"" << fill_opacity << "\"/>\n";
  return ss.str();
}

std::size_t stride_for(std::size_t n, std::size_t target) {
  return std::max<std::size_t>(1, n / target);
}

}  // namespace

std::string overview_svg(const Scenario& scenario, const std::vector<Trajectory>& trajectories) {
  const bool swap = scenario.n_agents > 1;
  const Viewport vp = swap ? Viewport{-1.4, 1.4, -1.4, 1.4, 560, 560, 20}
                           : Viewport{-1.5, 2.5, -1.5, 3.5, 480, 600, 20};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << vp.width + 2 * vp.margin
      << "\" height=\"" << vp.height + 2 * vp.margin << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (const auto& d : scenario.coverage) svg << circle(vp, d.center, d.radius, "green", "green", 0.08);
  for (const auto& d : scenario.obstacles) svg << circle(vp, d.center, d.radius, "red", "red", 0.25);

  for (const auto& traj : trajectories) {
    const std::size_t stride = stride_for(traj.states.size(), 400);
    for (int a = 0; a < scenario.n_agents; ++a) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t k = 0; k < traj.states.size(); k += stride) {
        pts.emplace_back(traj.states[k][2 * a], traj.states[k][2 * a + 1]);
      }
      pts.emplace_back(traj.states.back()[2 * a], traj.states.back()[2 * a + 1]);
      const std::string color = swap ? kPalette[a % kPalette.size()] : "#1f4e9c";
      svg << polyline(pts, vp, color, 1.0, swap ? 0.5 : 0.25);
    }
  }

  for (int a = 0; a < scenario.n_agents; ++a) {
    const Eigen::Vector2d start = scenario.x0.segment<2>(2 * a);
    const std::string color = swap ? kPalette[a % kPalette.size()] : "black";
    if (swap) {
      // Agent footprint, collision radius = half the pairwise minimum distance.
      const auto& pair = std::get<PairwiseSeparation>(scenario.tree.leaf_barrier(0).kind());
      svg << circle(vp, start, pair.min_distance / 2.0, color, color, 0.4);
    } else {
      svg << circle(vp, start, 0.03, color, color, 1.0);
    }
  }
  for (const auto& g : scenario.goals) {
    svg << "<path d=\"M " << f(vp.sx(g[0]) - 6) << ' ' << f(vp.sy(g[1])) << " l 12 0 M "
        << f(vp.sx(g[0])) << ' ' << f(vp.sy(g[1]) - 6)
        << " l 0 12\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  svg << "<text x=\"" << vp.margin << "\" y=\"14\" font-size=\"12\" font-family=\"sans-serif\">"
      << scenario.name << ": " << trajectories.size() << " trajectories</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string control_svg(const Trajectory& left, const Trajectory& right, double epsilon_left,
                        double epsilon_right) {
  constexpr double kPanelW = 420, kPanelH = 260, kMargin = 40;
  double u_max = 1e-9;
  for (const Trajectory* t : {&left, &right}) {
    for (const auto& u : t->controls) u_max = std::max({u_max, std::abs(u[0]), std::abs(u[1])});
  }
  double t_max = 1e-9;
  for (const Trajectory* t : {&left, &right}) {
    if (!t->times.empty()) t_max = std::max(t_max, t->times.back());
  }

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * (kPanelW + 2 * kMargin)
      << "\" height=\"" << kPanelH + 2 * kMargin << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::array<const Trajectory*, 2> panels{&left, &right};
  const std::array<double, 2> eps{epsilon_left, epsilon_right};
  for (int p = 0; p < 2; ++p) {
    const double x0 = p * (kPanelW + 2 * kMargin) + kMargin;
    const Viewport vp{0.0, t_max, -u_max, u_max, kPanelW, kPanelH, 0.0};
    svg << "<g transform=\"translate(" << x0 << ',' << kMargin << ")\">\n"
        << "<rect width=\"" << kPanelW << "\" height=\"" << kPanelH
        << "\" fill=\"none\" stroke=\"#999\"/>\n"
        << "<line x1=\"0\" x2=\"" << kPanelW << "\" y1=\"" << f(vp.sy(0)) << "\" y2=\""
        << f(vp.sy(0)) << "\" stroke=\"#ccc\"/>\n";
    const Trajectory& t = *panels[p];
    const std::size_t stride = stride_for(t.controls.size(), 4000);
    for (int c = 0; c < 2; ++c) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t k = 0; k < t.controls.size(); k += stride) {
        pts.emplace_back(t.times[k], t.controls[k][c]);
      }
      svg << polyline(pts, vp, kPalette[c], 0.8, 0.9);
    }
    const double t_end = t.times.empty() ? 0.0 : t.times.back();
    svg << "<text x=\"4\" y=\"-8\" font-size=\"13\" font-family=\"sans-serif\">epsilon = "
        << f(eps[p]) << " (u_x blue, u_y orange; agent 1)"
        << (t_end < t_max ? ", filter failed at t = " + f(t_end) + " s" : std::string())
        << "</text>\n"
        << "<text x=\"4\" y=\"" << kPanelH + 16
        << "\" font-size=\"11\" font-family=\"sans-serif\">t in [0, " << f(t_max)
        << "] s, |u| <= " << f(u_max) << "</text>\n</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace {

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw Error("failed writing " + path.string());
}

// One trial with the filter at the given margin, partial if the filter fails.
Trajectory control_run(const Scenario& scenario, TrialOptions options, double epsilon) {
  options.epsilon = epsilon;
  options.filter_enabled = true;
  try {
    return run_single_trial(scenario, options, 0);
  } catch (const SimulationError& e) {
    return e.partial();
  }
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
  std::optional<Scenario> built;
  try {
    built = build_scenario(config);
  } catch (const Error& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  const Scenario& scenario = *built;

  TrialOptions options = trial_options(config);
  constexpr std::size_t kPlotTrajectories = 20;
  options.keep_trajectories =
      std::min(config.trials, std::max(config.csv_limit, kPlotTrajectories));

  try {
    const fs::path root(config.output_dir);
    fs::create_directories(root / "trajectories");
    fs::create_directories(root / "plots");

    log << "running " << config.trials << " trial(s) of " << scenario.name
        << (config.filter ? " with" : " without") << " the safety filter\n";
    const MonteCarloSummary summary = run_trials(scenario, options);

    for (std::size_t k = 0; k < std::min(config.csv_limit, summary.trajectories.size()); ++k) {
      std::ostringstream csv;
      write_trajectory_csv(csv, summary.trajectories[k]);
      write_file(root / "trajectories" / ("trial_" + std::to_string(k) + ".csv"), csv.str());
    }
    write_file(root / "summary.json", summary_to_json(summary, config).dump(2) + "\n");
    write_file(root / "plots" / "overview.svg", overview_svg(scenario, summary.trajectories));
    write_file(root / "plots" / "control.svg",
               control_svg(control_run(scenario, options, 0.0),
                           control_run(scenario, options, 0.05), 0.0, 0.05));

    log << "safety_rate " << summary.safety_rate << ", failures " << summary.failures.size()
        << ", median filter time " << summary.qp_time.median * 1e3 << " ms\n";
    if (summary.failures.size() == summary.n_trials) {
      log << "batch failure: every trial failed\n";
      return kExitBatch;
    }
    return kExitOk;
  } catch (const std::exception& e) {
    log << "batch failure: " << e.what() << '\n';
    return kExitBatch;
  }
}

}  // namespace nscbf
