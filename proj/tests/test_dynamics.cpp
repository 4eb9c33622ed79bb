#include <gtest/gtest.h>

#include <cmath>

#include "nscbf/dynamics.hpp"
#include "nscbf/scenarios.hpp"

using namespace nscbf;

namespace {

Controller zero_controller(int m) {
  return [m](double, const Vector&) { return Vector::Zero(m).eval(); };
}

}  // namespace

TEST(SingleIntegrator, DiffusionIsScaledIdentity) {
  const auto model = single_integrator(0.025);
  EXPECT_EQ(model.state_dim, 2);
  EXPECT_EQ(model.input_dim, 2);
  EXPECT_EQ(model.noise_dim, 2);
  const Vector x = Vector::Zero(2);
  EXPECT_TRUE(model.diffusion(x).isApprox(0.025 * Matrix::Identity(2, 2)));
}

TEST(SingleIntegrator, DriftZeroAndInputIdentity) {
  const auto model = single_integrator(1.0);
  Vector x(2);
  x << 4.0, -7.5;
  EXPECT_EQ(model.drift(x), Vector::Zero(2));
  const auto m2 = single_integrator(0.025);
  x << 3.0, -1.0;
  EXPECT_EQ(m2.input_matrix(x), Matrix::Identity(2, 2));
}

TEST(SingleIntegrator, RejectsNonPositiveSigma) {
  EXPECT_THROW(single_integrator(0.0), InvalidArgument);
  EXPECT_THROW(single_integrator(-1.0), InvalidArgument);
}

TEST(JointModel, StacksSixIntegrators) {
  const auto model = joint_model(std::vector<SDEModel>(6, single_integrator(0.025)));
  EXPECT_EQ(model.state_dim, 12);
  EXPECT_EQ(model.input_dim, 12);
  EXPECT_EQ(model.noise_dim, 12);
  const Vector x = Vector::LinSpaced(12, -1.0, 1.0);
  EXPECT_TRUE(model.diffusion(x).isApprox(0.025 * Matrix::Identity(12, 12)));
  EXPECT_EQ(model.input_matrix(x), Matrix::Identity(12, 12));
}

TEST(JointModel, BlockDiagonalForMixedSigmas) {
  const auto model = joint_model({single_integrator(0.1), single_integrator(0.3)});
  const Vector d = model.diffusion(Vector::Zero(4)).diagonal();
  EXPECT_DOUBLE_EQ(d[0], 0.1);
  EXPECT_DOUBLE_EQ(d[1], 0.1);
  EXPECT_DOUBLE_EQ(d[2], 0.3);
  EXPECT_DOUBLE_EQ(d[3], 0.3);
  EXPECT_DOUBLE_EQ(model.diffusion(Vector::Zero(4))(0, 2), 0.0);
}

TEST(JointModel, SingletonBehavesLikeInput) {
  const auto base = single_integrator(0.2);
  const auto model = joint_model({base});
  Vector x(2), u(2), w(2);
  x << 0.3, -0.1;
  u << 1.0, 2.0;
  w << 0.5, -0.7;
  EXPECT_EQ(euler_maruyama_step(model, x, u, 0.01, w), euler_maruyama_step(base, x, u, 0.01, w));
}

TEST(JointModel, DriftOfTwoIsZero4) {
  const auto model = joint_model({single_integrator(1.0), single_integrator(1.0)});
  EXPECT_EQ(model.drift(Vector::Ones(4)), Vector::Zero(4));
}

TEST(JointModel, RejectsEmpty) { EXPECT_THROW(joint_model({}), InvalidArgument); }

TEST(EulerMaruyama, ZeroNoiseIsExplicitEuler) {
  const auto model = single_integrator(0.025);
  const Vector x = Vector::Zero(2);
  const Vector u = Eigen::Vector2d(1.0, 0.0);
  const Vector out = euler_maruyama_step(model, x, u, 0.01, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(out[0], 0.01);
  EXPECT_DOUBLE_EQ(out[1], 0.0);
}

TEST(EulerMaruyama, PureDiffusion) {
  const auto model = single_integrator(0.025);
  const Vector out =
      euler_maruyama_step(model, Vector::Zero(2), Vector::Zero(2), 0.01, Vector::Ones(2));
  EXPECT_NEAR(out[0], 0.0025, 1e-15);
  EXPECT_NEAR(out[1], 0.0025, 1e-15);
}

TEST(EulerMaruyama, DeterministicGivenSeededNoise) {
  const auto model = single_integrator(0.5);
  NoiseStream a(42), b(42);
  const Vector x = Eigen::Vector2d(0.1, 0.2);
  const Vector u = Eigen::Vector2d(-1.0, 0.5);
  EXPECT_EQ(euler_maruyama_step(model, x, u, 0.01, a.draw(2)),
            euler_maruyama_step(model, x, u, 0.01, b.draw(2)));
}

TEST(EulerMaruyama, DimensionMismatch) {
  const auto model = single_integrator(0.1);
  EXPECT_THROW(euler_maruyama_step(model, Vector::Zero(3), Vector::Zero(2), 0.01, Vector::Zero(2)),
               DimensionError);
  EXPECT_THROW(euler_maruyama_step(model, Vector::Zero(2), Vector::Zero(1), 0.01, Vector::Zero(2)),
               DimensionError);
  EXPECT_THROW(euler_maruyama_step(model, Vector::Zero(2), Vector::Zero(2), 0.01, Vector::Zero(4)),
               DimensionError);
}

TEST(EulerMaruyama, RejectsNonPositiveDt) {
  const auto model = single_integrator(0.1);
  EXPECT_THROW(euler_maruyama_step(model, Vector::Zero(2), Vector::Zero(2), 0.0, Vector::Zero(2)),
               InvalidArgument);
}

TEST(CheckDiffusion, RejectsOffDiagonalAndNonPositive) {
  auto model = single_integrator(0.1);
  model.diffusion = [](const Vector&) {
    Matrix s = Matrix::Identity(2, 2);
    s(0, 1) = 0.1;
    return s;
  };
  EXPECT_THROW(check_diffusion(model, Vector::Zero(2)), InvalidArgument);
  model.diffusion = [](const Vector&) { return Matrix::Zero(2, 2).eval(); };
  EXPECT_THROW(check_diffusion(model, Vector::Zero(2)), InvalidArgument);
}

TEST(DeriveSeed, DistinctAcrossIndicesAndMasters) {
  EXPECT_NE(derive_seed(0, 0), derive_seed(0, 1));
  EXPECT_NE(derive_seed(0, 1), derive_seed(1, 0));
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}

TEST(Simulate, StepCountAndLayout) {
  const auto model = single_integrator(0.025);
  const auto traj = simulate(model, zero_controller(2), Vector::Zero(2), 0.01, 1e-3, 1);
  EXPECT_EQ(step_count(0.01, 1e-3), 10u);
  ASSERT_EQ(traj.states.size(), 11u);
  EXPECT_EQ(traj.controls.size(), 10u);
  EXPECT_EQ(traj.times.size(), 11u);
  EXPECT_NEAR(traj.times.back(), 0.01, 1e-15);
  EXPECT_TRUE(traj.h_values.empty());
}

TEST(Simulate, ZeroControllerNoNoiseStaysPut) {
  const auto model = single_integrator(1e-12);
  SimulateOptions opt;
  opt.zero_noise = true;
  const Vector x0 = Eigen::Vector2d(1.0, 2.0);
  const auto traj = simulate(model, zero_controller(2), x0, 1.0, 1e-2, 5, opt);
  for (const auto& x : traj.states) EXPECT_EQ(x, x0);
}

TEST(Simulate, SameSeedBitwiseIdentical) {
  const auto model = single_integrator(0.3);
  const auto ctrl = proportional_controller(Eigen::Vector2d(1.0, 1.0), 1.0);
  const auto a = simulate(model, ctrl, Vector::Zero(2), 1.0, 1e-3, 99);
  const auto b = simulate(model, ctrl, Vector::Zero(2), 1.0, 1e-3, 99);
  const auto c = simulate(model, ctrl, Vector::Zero(2), 1.0, 1e-3, 100);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) ASSERT_EQ(a.states[k], b.states[k]);
  EXPECT_NE(a.states.back(), c.states.back());
}

TEST(Simulate, ZeroNoiseMatchesExplicitEuler) {
  const auto model = single_integrator(0.3);
  const Vector goal = Eigen::Vector2d(1.8, 1.0);
  const auto ctrl = proportional_controller(goal, 1.5);
  SimulateOptions opt;
  opt.zero_noise = true;
  const double dt = 1e-3;
  const auto traj = simulate(model, ctrl, Vector::Zero(2), 2.0, dt, 3, opt);
  Vector x = Vector::Zero(2);
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    const Vector u = 1.5 * (goal - x);
    x = x + u * dt;
    ASSERT_EQ(traj.states[k + 1], x) << "step " << k;
  }
}

TEST(Simulate, DiffusionScalingDoublesIncrement) {
  const auto m1 = single_integrator(0.1);
  const auto m2 = single_integrator(0.2);
  const auto ctrl = proportional_controller(Eigen::Vector2d(0.5, -0.5), 1.0);
  const double dt = 1e-2;
  const auto t1 = simulate(m1, ctrl, Vector::Zero(2), 0.5, dt, 11);
  NoiseStream noise(11);
  // replay matched noise from each visited state of the first run
  for (std::size_t k = 0; k + 1 < t1.states.size(); ++k) {
    const Vector& x = t1.states[k];
    const Vector u = ctrl(t1.times[k], x);
    const Vector w = noise.draw(2);
    const Vector inc1 = euler_maruyama_step(m1, x, u, dt, w) - x - u * dt;
    const Vector inc2 = euler_maruyama_step(m2, x, u, dt, w) - x - u * dt;
    EXPECT_TRUE(inc2.isApprox(2.0 * inc1, 1e-12));
    EXPECT_TRUE(t1.states[k + 1].isApprox(x + u * dt + inc1, 1e-14));
  }
}

TEST(Simulate, ProportionalConvergesWithoutNoise) {
  const auto model = single_integrator(0.025);
  const Vector goal = Eigen::Vector2d(1.8, 1.0);
  SimulateOptions opt;
  opt.zero_noise = true;
  const auto traj =
      simulate(model, proportional_controller(goal, 1.0), Vector::Zero(2), 10.0, 1e-3, 0, opt);
  // |x_T - G| = |G| (1 - dt)^N <= |G| e^{-10}
  EXPECT_LT((traj.states.back() - goal).norm(), 1e-3);
}

TEST(Simulate, ControllerFailureCarriesStep) {
  const auto model = single_integrator(0.025);
  Controller ctrl = [](double t, const Vector&) -> Vector {
    if (t > 0.0045) throw std::runtime_error("boom");
    return Vector::Zero(2);
  };
  try {
    simulate(model, ctrl, Vector::Zero(2), 0.01, 1e-3, 1);
    FAIL() << "expected SimulationError";
  } catch (const SimulationError& e) {
    EXPECT_EQ(e.step(), 5u);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
    EXPECT_EQ(e.partial().states.size(), 6u);
    EXPECT_EQ(e.partial().controls.size(), 5u);
  }
}

TEST(Simulate, NonFiniteControlIsFailure) {
  const auto model = single_integrator(0.025);
  Controller ctrl = [](double, const Vector&) {
    return Vector::Constant(2, std::nan("")).eval();
  };
  EXPECT_THROW(simulate(model, ctrl, Vector::Zero(2), 0.01, 1e-3, 1), SimulationError);
}

TEST(Simulate, RecordsTreeQuantities) {
  const auto sc = single_agent_boolean();
  SimulateOptions opt;
  opt.tree = &sc.tree;
  opt.epsilon = 0.05;
  const auto traj = simulate(sc.model, sc.reference, sc.x0, 0.05, 1e-3, 2, opt);
  ASSERT_EQ(traj.h_values.size(), traj.states.size());
  ASSERT_EQ(traj.active_leaves.size(), traj.states.size());
  EXPECT_DOUBLE_EQ(traj.h_values[0], sc.tree.eval(sc.x0));
  EXPECT_EQ(traj.active_leaves[0], std::vector<int>{1});
}

TEST(Simulate, RejectsBadHorizon) {
  const auto model = single_integrator(0.025);
  EXPECT_THROW(simulate(model, zero_controller(2), Vector::Zero(2), 1e-4, 1e-3, 1),
               InvalidArgument);
  EXPECT_THROW(simulate(model, zero_controller(2), Vector::Zero(3), 1.0, 1e-3, 1),
               DimensionError);
}
