#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nscbf/dynamics.hpp"
#include "nscbf/safety_filter.hpp"
#include "nscbf/scenarios.hpp"

namespace nscbf {

struct TrialOptions {
  std::size_t n_trials = 500;
  std::uint64_t master_seed = 0;
  double dt = 1e-3;
  double epsilon = 0.05;
  bool filter_enabled = true;
  ClassK alpha3 = ClassK::identity();
  std::optional<InputBox> bounds;
  std::optional<double> slack_penalty;
  /// Overrides the scenario horizon when set.
  std::optional<double> horizon;
  bool zero_noise = false;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
  /// Trajectories (partial for failed trials) are retained for the first
  /// `keep_trajectories` trials; `trajectories[k]` belongs to trial k.
  std::size_t keep_trajectories = 0;
};

/// Outcome of one trial. For a failed trial the metrics describe the partial
/// trajectory executed before the failing step.
struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  std::size_t failure_step = 0;
  double min_h = 0.0;
  double tv_control = 0.0;
  Vector final_state;
  std::size_t exit_events = 0;
  double max_slack = 0.0;
};

struct TimingStats {
  std::size_t samples = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double max = 0.0;
};

struct TrialFailure {
  std::size_t trial = 0;
  std::size_t step = 0;
  std::string reason;
};

/// Aggregate over a batch. Per-trial vectors (`min_h`, `tv_control`,
/// `final_states`) cover completed trials only, in trial order. Failed trials
/// count as unsafe in `safety_rate`.
struct MonteCarloSummary {
  std::size_t n_trials = 0;
  double safety_rate = 0.0;
  std::vector<double> min_h;
  std::vector<double> tv_control;
  std::vector<Vector> final_states;
  TimingStats qp_time;  // seconds per filter call
  std::vector<TrialFailure> failures;
  std::vector<TrialRecord> trials;
  std::vector<Trajectory> trajectories;
};

/// Runs `n_trials` independent closed loops; trial k draws its noise from
/// derive_seed(master_seed, k), so results do not depend on scheduling.
MonteCarloSummary run_trials(const Scenario& scenario, const TrialOptions& options);

/// One trial of a batch, with its full trajectory.
Trajectory run_single_trial(const Scenario& scenario, const TrialOptions& options,
                            std::size_t trial_index);

/// Total variation sum_k ||u_{k+1} - u_k||.
double switching_metric(const Trajectory& trajectory);

}  // namespace nscbf
