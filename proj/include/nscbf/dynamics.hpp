#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nscbf/error.hpp"

namespace nscbf {

class BarrierTree;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Control-affine Ito SDE  dx = (f(x) + g(x) u) dt + sigma(x) dbeta.
///
/// The diffusion must be diagonal (n == noise_dim) with strictly positive
/// entries; `simulate` checks this at every visited state.
struct SDEModel {
  int state_dim = 0;
  int input_dim = 0;
  int noise_dim = 0;
  std::function<Vector(const Vector&)> drift;
  std::function<Matrix(const Vector&)> input_matrix;
  std::function<Matrix(const Vector&)> diffusion;
};

/// Feedback law u = k(t, x).
using Controller = std::function<Vector(double, const Vector&)>;

struct ExitEvent {
  double time = 0.0;
  int from_leaf = -1;
  int to_leaf = -1;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> controls;  // one shorter than states
  std::vector<double> h_values;  // empty unless a tree was attached
  std::vector<std::vector<int>> active_leaves;
  std::vector<ExitEvent> exit_events;
};

/// Raised when the controller throws during `simulate`; carries the step and
/// the trajectory up to (not including) the failed step.
class SimulationError : public Error {
 public:
  SimulationError(std::size_t step, double time, const std::string& reason,
                  Trajectory partial = {})
      : Error("controller failed at step " + std::to_string(step) + ": " + reason),
        step_(step),
        time_(time),
        reason_(reason),
        partial_(std::make_shared<Trajectory>(std::move(partial))) {}

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }
  const std::string& reason() const noexcept { return reason_; }
  const Trajectory& partial() const noexcept { return *partial_; }

 private:
  std::size_t step_;
  double time_;
  std::string reason_;
  std::shared_ptr<const Trajectory> partial_;
};

SDEModel single_integrator(double sigma);

/// Block-diagonal stacking of independent agent models.
SDEModel joint_model(const std::vector<SDEModel>& agent_models);

/// Throws InvalidArgument unless sigma(x) is square, diagonal and positive.
void check_diffusion(const SDEModel& model, const Vector& x);

/// x + (f(x) + g(x) u) dt + sigma(x) sqrt(dt) noise.
Vector euler_maruyama_step(const SDEModel& model, const Vector& x, const Vector& u,
                           double dt, const Vector& noise);

/// Seed for trial `index` of a batch; a SplitMix64 mix of both inputs so
/// trial streams do not depend on execution order.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Independent standard-normal stream.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : engine_(seed) {}

  Vector draw(int dim);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct SimulateOptions {
  /// When set, h, the almost-active set and exit events are recorded.
  const BarrierTree* tree = nullptr;
  double epsilon = 0.0;
  /// Force every noise draw to zero (deterministic explicit Euler).
  bool zero_noise = false;
};

/// Number of integration steps for a horizon, ceil(horizon / dt).
std::size_t step_count(double horizon, double dt);

/// Zero-order-hold closed loop around `euler_maruyama_step`.
Trajectory simulate(const SDEModel& model, const Controller& controller, const Vector& x0,
                    double horizon, double dt, std::uint64_t seed,
                    const SimulateOptions& options = {});

}  // namespace nscbf
