#include "nscbf/dynamics.hpp"

#include <cmath>
#include <string>

#include "nscbf/barrier_tree.hpp"

namespace nscbf {

SDEModel single_integrator(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("single_integrator: sigma must be positive, got " +
                          std::to_string(sigma));
  }
  SDEModel model;
  model.state_dim = 2;
  model.input_dim = 2;
  model.noise_dim = 2;
  model.drift = [](const Vector&) { return Vector::Zero(2); };
  model.input_matrix = [](const Vector&) { return Matrix::Identity(2, 2); };
  model.diffusion = [sigma](const Vector&) { return Matrix(sigma * Matrix::Identity(2, 2)); };
  return model;
}

SDEModel joint_model(const std::vector<SDEModel>& agent_models) {
  if (agent_models.empty()) {
    throw InvalidArgument("joint_model: at least one agent model is required");
  }
  if (agent_models.size() == 1) {
    return agent_models.front();
  }

  struct Block {
    int state_offset, input_offset, noise_offset;
  };
  std::vector<Block> blocks;
  SDEModel joint;
  for (const auto& m : agent_models) {
    blocks.push_back({joint.state_dim, joint.input_dim, joint.noise_dim});
    joint.state_dim += m.state_dim;
    joint.input_dim += m.input_dim;
    joint.noise_dim += m.noise_dim;
  }

  const int n = joint.state_dim, m = joint.input_dim, l = joint.noise_dim;
  joint.drift = [agent_models, blocks, n](const Vector& x) {
    Vector f(n);
    for (std::size_t k = 0; k < agent_models.size(); ++k) {
      const int nk = agent_models[k].state_dim;
      f.segment(blocks[k].state_offset, nk) =
          agent_models[k].drift(x.segment(blocks[k].state_offset, nk));
    }
    return f;
  };
  joint.input_matrix = [agent_models, blocks, n, m](const Vector& x) {
    Matrix g = Matrix::Zero(n, m);
    for (std::size_t k = 0; k < agent_models.size(); ++k) {
      const auto& a = agent_models[k];
      g.block(blocks[k].state_offset, blocks[k].input_offset, a.state_dim, a.input_dim) =
          a.input_matrix(x.segment(blocks[k].state_offset, a.state_dim));
    }
    return g;
  };
  joint.diffusion = [agent_models, blocks, n, l](const Vector& x) {
    Matrix s = Matrix::Zero(n, l);
    for (std::size_t k = 0; k < agent_models.size(); ++k) {
      const auto& a = agent_models[k];
      s.block(blocks[k].state_offset, blocks[k].noise_offset, a.state_dim, a.noise_dim) =
          a.diffusion(x.segment(blocks[k].state_offset, a.state_dim));
    }
    return s;
  };
  return joint;
}

void check_diffusion(const SDEModel& model, const Vector& x) {
  const Matrix s = model.diffusion(x);
  if (s.rows() != model.state_dim || s.cols() != model.noise_dim || s.rows() != s.cols()) {
    throw InvalidArgument("diffusion must be a square state_dim x state_dim matrix");
  }
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      const double v = s(i, j);
      if (i == j ? !(v > 0.0 && std::isfinite(v)) : v != 0.0) {
        throw InvalidArgument("diffusion must be diagonal with positive entries");
      }
    }
  }
}

Vector euler_maruyama_step(const SDEModel& model, const Vector& x, const Vector& u, double dt,
                           const Vector& noise) {
  if (!(dt > 0.0)) {
    throw InvalidArgument("euler_maruyama_step: dt must be positive");
  }
  if (x.size() != model.state_dim || u.size() != model.input_dim ||
      noise.size() != model.noise_dim) {
    throw DimensionError("euler_maruyama_step: expected x/u/noise of size " +
                         std::to_string(model.state_dim) + "/" +
                         std::to_string(model.input_dim) + "/" +
                         std::to_string(model.noise_dim) + ", got " +
                         std::to_string(x.size()) + "/" + std::to_string(u.size()) + "/" +
                         std::to_string(noise.size()));
  }
  return x + (model.drift(x) + model.input_matrix(x) * u) * dt +
         model.diffusion(x) * (std::sqrt(dt) * noise);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return splitmix(splitmix(master_seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

Vector NoiseStream::draw(int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal_(engine_);
  return v;
}

std::size_t step_count(double horizon, double dt) {
  // Guard against 0.01 / 0.001 landing a hair above an integer.
  return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

Trajectory simulate(const SDEModel& model, const Controller& controller, const Vector& x0,
                    double horizon, double dt, std::uint64_t seed,
                    const SimulateOptions& options) {
  if (!(dt > 0.0) || !(horizon > dt)) {
    throw InvalidArgument("simulate: require horizon > dt > 0");
  }
  if (x0.size() != model.state_dim) {
    throw DimensionError("simulate: x0 has size " + std::to_string(x0.size()) +
                         ", model expects " + std::to_string(model.state_dim));
  }

  const std::size_t steps = step_count(horizon, dt);
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.controls.reserve(steps);

  NoiseStream noise(seed);
  Vector x = x0;
  int previous_leaf = -1;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    check_diffusion(model, x);
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (options.tree != nullptr) {
      const auto values = options.tree->leaf_values(x);
      const auto sel = options.tree->select(values);
      traj.h_values.push_back(sel.value);
      traj.active_leaves.push_back(
          options.tree->almost_active_from_values(values, options.epsilon).near);
      if (previous_leaf >= 0 && sel.leaf != previous_leaf) {
        traj.exit_events.push_back({t, previous_leaf, sel.leaf});
      }
      previous_leaf = sel.leaf;
    }
    if (k == steps) break;

    Vector u;
    try {
      u = controller(t, x);
    } catch (const std::exception& e) {
      throw SimulationError(k, t, e.what(), std::move(traj));
    }
    if (u.size() != model.input_dim || !u.allFinite()) {
      throw SimulationError(k, t, "controller returned an invalid control vector",
                            std::move(traj));
    }
    const Vector w = options.zero_noise ? Vector::Zero(model.noise_dim)
                                        : noise.draw(model.noise_dim);
    x = euler_maruyama_step(model, x, u, dt, w);
    traj.controls.push_back(std::move(u));
  }
  return traj;
}

}  // namespace nscbf
