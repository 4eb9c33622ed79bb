#pragma once

#include <string>
#include <vector>

#include "nscbf/barrier_tree.hpp"
#include "nscbf/dynamics.hpp"

namespace nscbf {

struct Disk {
  Eigen::Vector2d center;
  double radius = 0.0;
};

/// A benchmark closed loop: model, safety tree, nominal controller and the
/// geometry needed to draw it.
struct Scenario {
  std::string name;
  SDEModel model;
  BarrierTree tree;
  Controller reference;
  Vector x0;
  double horizon = 0.0;
  int n_agents = 1;
  int agent_dim = 2;
  std::vector<Vector> goals;  // one per agent
  std::vector<Disk> obstacles;
  std::vector<Disk> coverage;
};

/// u = gain (goal - x). Applies block-wise when goal stacks several agents.
Controller proportional_controller(Vector goal, double gain);

struct SingleAgentOptions {
  double sigma = 0.025;
  Eigen::Vector2d x0{-0.5, 0.0};
  double kp = 1.0;
  double horizon = 10.0;
};

/// One robot that must avoid an obstacle and stay inside the union of two
/// network coverage disks:  h = min(mu_o, max(mu_n1, mu_n2)).
Scenario single_agent_boolean(const SingleAgentOptions& options = {});

struct SwapOptions {
  int n_agents = 6;
  double collision_radius = 0.1;
  double sigma = 0.025;
  double kp = 2.0;
  double horizon = 15.0;
};

/// Agents spaced evenly on the unit circle swap with their antipodes;
/// h = min over pairs of ||x_i - x_j|| - 2r.
Scenario multi_agent_swap(const SwapOptions& options = {});

}  // namespace nscbf
