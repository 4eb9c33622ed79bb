#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "nscbf/config.hpp"
#include "nscbf/montecarlo.hpp"

namespace nscbf {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

/// Columns: t, x1..xn, u1..um, h, active_leaves (';'-joined). One row per
/// state; the control cells of the final row are empty.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

nlohmann::json summary_to_json(const MonteCarloSummary& summary, const RunConfig& config);

/// Trajectories drawn over the scenario geometry.
std::string overview_svg(const Scenario& scenario, const std::vector<Trajectory>& trajectories);

/// Agent one's control components over time for two runs side by side.
std::string control_svg(const Trajectory& no_margin, const Trajectory& with_margin,
                        double epsilon_left, double epsilon_right);

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitBatch = 2 };

/// Runs the batch and writes trajectories/, summary.json and plots/ under
/// config.output_dir. Returns an ExitCode; diagnostics go to `log`.
int run(const RunConfig& config, std::ostream& log);

}  // namespace nscbf
