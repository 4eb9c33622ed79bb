#include "nscbf/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace nscbf {

namespace {

void validate_start(const Scenario& s) {
  if (s.x0.size() != s.model.state_dim || s.tree.state_dim() != s.model.state_dim) {
    throw DimensionError(s.name + ": inconsistent state dimensions");
  }
  const double h0 = s.tree.eval(s.x0);
  if (!(h0 > 0.0)) {
    throw InvalidArgument(s.name + ": initial state is not strictly safe (h = " +
                          std::to_string(h0) + ")");
  }
}

}  // namespace

Controller proportional_controller(Vector goal, double gain) {
  if (!(gain > 0.0) || !std::isfinite(gain)) {
    throw InvalidArgument("proportional_controller: gain must be positive");
  }
  return [goal = std::move(goal), gain](double, const Vector& x) -> Vector {
    if (x.size() != goal.size()) {
      throw DimensionError("proportional_controller: state/goal size mismatch");
    }
    return gain * (goal - x);
  };
}

Scenario single_agent_boolean(const SingleAgentOptions& options) {
  if (!(options.horizon > 0.0)) throw InvalidArgument("single_agent_boolean: horizon must be > 0");

  const Disk obstacle{{1.2, 0.4}, 0.6};
  const Disk n1{{0.0, -0.2}, 1.1};
  const Disk n2{{0.5, 1.8}, 1.4};

  using N = BarrierTree;
  auto root = N::min({
      N::leaf(SmoothBarrier(KeepOutDisk{obstacle.center, obstacle.radius}, "mu_o")),
      N::max({
          N::leaf(SmoothBarrier(KeepInDisk{n1.center, n1.radius}, "mu_n1")),
          N::leaf(SmoothBarrier(KeepInDisk{n2.center, n2.radius}, "mu_n2")),
      }),
  });

  const Vector goal = Eigen::Vector2d(1.8, 1.0);
  Scenario s{
      .name = "single-boolean",
      .model = single_integrator(options.sigma),
      .tree = BarrierTree(std::move(root), 2),
      .reference = proportional_controller(goal, options.kp),
      .x0 = options.x0,
      .horizon = options.horizon,
      .n_agents = 1,
      .agent_dim = 2,
      .goals = {goal},
      .obstacles = {obstacle},
      .coverage = {n1, n2},
  };
  validate_start(s);
  return s;
}

Scenario multi_agent_swap(const SwapOptions& options) {
  const int n = options.n_agents;
  const double r = options.collision_radius;
  if (n < 2) throw InvalidArgument("multi_agent_swap: n_agents must be >= 2");
  if (!(r > 0.0)) throw InvalidArgument("multi_agent_swap: collision_radius must be > 0");
  if (!(options.horizon > 0.0)) throw InvalidArgument("multi_agent_swap: horizon must be > 0");
  // Closest initial pair are neighbours on the circle, 2 sin(pi/n) apart.
  if (!(2.0 * std::sin(std::numbers::pi / n) > 2.0 * r)) {
    throw InvalidArgument("multi_agent_swap: agents start in collision for n_agents = " +
                          std::to_string(n) + ", collision_radius = " + std::to_string(r));
  }

  std::vector<SDEModel> agents(n, single_integrator(options.sigma));
  Vector x0(2 * n), goal(2 * n);
  std::vector<Vector> goals;
  for (int k = 0; k < n; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / n;
    x0.segment<2>(2 * k) << std::cos(theta), std::sin(theta);
    goal.segment<2>(2 * k) = -x0.segment<2>(2 * k);
    goals.emplace_back(goal.segment<2>(2 * k));
  }

  std::vector<BarrierTree::Node> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      pairs.push_back(BarrierTree::leaf(SmoothBarrier(PairwiseSeparation{i, j, 2.0 * r, 2})));
    }
  }

  Scenario s{
      .name = "multi-swap",
      .model = joint_model(agents),
      .tree = BarrierTree(BarrierTree::min(std::move(pairs)), 2 * n),
      .reference = proportional_controller(goal, options.kp),
      .x0 = x0,
      .horizon = options.horizon,
      .n_agents = n,
      .agent_dim = 2,
      .goals = std::move(goals),
      .obstacles = {},
      .coverage = {},
  };
  validate_start(s);
  return s;
}

}  // namespace nscbf
