#include "nscbf/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace nscbf {

namespace {

struct TrialOutput {
  TrialRecord record;
  std::vector<float> filter_seconds;
  std::optional<Trajectory> trajectory;
};

Controller make_controller(const Scenario& scenario, const TrialOptions& options,
                           std::vector<float>* timings, double* max_slack) {
  if (!options.filter_enabled) return scenario.reference;
  FilterOptions filter{options.epsilon, options.alpha3, options.bounds, options.slack_penalty};
  return [&scenario, filter, timings, max_slack](double t, const Vector& x) {
    const Vector u_ref = scenario.reference(t, x);
    const auto start = std::chrono::steady_clock::now();
    FilterResult result = filter_control(scenario.model, scenario.tree, x, u_ref, filter);
    const auto stop = std::chrono::steady_clock::now();
    if (timings) timings->push_back(std::chrono::duration<float>(stop - start).count());
    if (max_slack) *max_slack = std::max(*max_slack, result.slack);
    return result.u;
  };
}

TrialOutput run_trial(const Scenario& scenario, const TrialOptions& options, std::size_t index) {
  TrialOutput out;
  TrialRecord& rec = out.record;
  rec.index = index;
  rec.seed = derive_seed(options.master_seed, index);

  SimulateOptions sim;
  sim.tree = &scenario.tree;
  sim.epsilon = options.epsilon;
  sim.zero_noise = options.zero_noise;

  const double horizon = options.horizon.value_or(scenario.horizon);
  Controller controller = make_controller(scenario, options, &out.filter_seconds, &rec.max_slack);
  auto record = [&](Trajectory traj) {
    rec.min_h = *std::min_element(traj.h_values.begin(), traj.h_values.end());
    rec.tv_control = traj.controls.size() >= 2 ? switching_metric(traj) : 0.0;
    rec.final_state = traj.states.back();
    rec.exit_events = traj.exit_events.size();
    if (index < options.keep_trajectories) out.trajectory = std::move(traj);
  };
  try {
    record(simulate(scenario.model, controller, scenario.x0, horizon, options.dt, rec.seed, sim));
  } catch (const SimulationError& e) {
    rec.failed = true;
    rec.failure = e.reason();
    rec.failure_step = e.step();
    record(e.partial());
  }
  return out;
}

TimingStats timing_stats(std::vector<float> samples) {
  TimingStats s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  double sum = 0.0, sum_sq = 0.0;
  for (float v : samples) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(samples.size());
  s.mean = sum / n;
  s.stddev = std::sqrt(std::max(0.0, sum_sq / n - s.mean * s.mean));
  auto mid = samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2);
  std::nth_element(samples.begin(), mid, samples.end());
  s.median = *mid;
  s.max = *std::max_element(samples.begin(), samples.end());
  return s;
}

}  // namespace

Trajectory run_single_trial(const Scenario& scenario, const TrialOptions& options,
                            std::size_t trial_index) {
  SimulateOptions sim;
  sim.tree = &scenario.tree;
  sim.epsilon = options.epsilon;
  sim.zero_noise = options.zero_noise;
  const Controller controller = make_controller(scenario, options, nullptr, nullptr);
  return simulate(scenario.model, controller, scenario.x0,
                  options.horizon.value_or(scenario.horizon), options.dt,
                  derive_seed(options.master_seed, trial_index), sim);
}

MonteCarloSummary run_trials(const Scenario& scenario, const TrialOptions& options) {
  if (options.n_trials < 1) throw InvalidArgument("run_trials: n_trials must be >= 1");

  std::vector<TrialOutput> outputs(options.n_trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < options.n_trials; i = next++) {
      outputs[i] = run_trial(scenario, options, i);
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(options.n_trials));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  MonteCarloSummary summary;
  summary.n_trials = options.n_trials;
  std::size_t safe = 0;
  std::vector<float> timings;
  for (auto& out : outputs) {
    const TrialRecord& rec = out.record;
    timings.insert(timings.end(), out.filter_seconds.begin(), out.filter_seconds.end());
    if (rec.failed) {
      summary.failures.push_back({rec.index, rec.failure_step, rec.failure});
    } else {
      summary.min_h.push_back(rec.min_h);
      summary.tv_control.push_back(rec.tv_control);
      summary.final_states.push_back(rec.final_state);
      if (rec.min_h >= 0.0) ++safe;
    }
    if (out.trajectory) summary.trajectories.push_back(std::move(*out.trajectory));
    summary.trials.push_back(rec);
  }
  summary.safety_rate = static_cast<double>(safe) / static_cast<double>(options.n_trials);
  summary.qp_time = timing_stats(std::move(timings));
  return summary;
}

double switching_metric(const Trajectory& trajectory) {
  const auto& u = trajectory.controls;
  if (u.size() < 2) {
    throw InvalidArgument("switching_metric: need at least two control samples");
  }
  double total = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) total += (u[k] - u[k - 1]).norm();
  return total;
}

}  // namespace nscbf
