#include <cmath>
#include <limits>

#include "cel/config.hpp"
#include "cel/errors.hpp"
#include "cel/simulate.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cel;
using cel::test::vec;

namespace {

ManipulatorModel without_gravity(const ManipulatorModel& m) {
  return ManipulatorModel(m.links(), 0.0, m.friction());
}

RobotState run_for(const ManipulatorModel& m, RobotState s, double duration,
                   const SimConfig& cfg,
                   const std::function<JointVector(const RobotState&)>& torque) {
  const long long steps = std::llround(duration / cfg.dt_s);
  for (long long k = 0; k < steps; ++k) s = step(m, s, torque(s), cfg);
  return s;
}

// Gravity and friction compensation plus a push that keeps both joints
// moving forward, so no velocity ever reaches zero.
JointVector smooth_drive(const ManipulatorModel& m, const RobotState& s) {
  return gravity_vector(m, s.q) + friction_torque(m.friction(), s.qd) +
         vec({0.5 * std::cos(2.0 * s.t), 0.3 * std::sin(3.0 * s.t)});
}

}  // namespace

TEST_CASE("an unforced arm at rest without gravity never moves") {
  const ManipulatorModel m = without_gravity(ManipulatorModel::DefaultTwoLink());
  SimConfig cfg;
  RobotState s{0.0, vec({0.3, -0.2}), vec({0.0, 0.0})};
  const RobotState end = run_for(m, s, 2.0, cfg, [](const RobotState&) {
    return JointVector::Zero(2);
  });
  CHECK(end.q == s.q);
  CHECK(end.qd == s.qd);
  CHECK(end.t == doctest::Approx(2.0));
}

TEST_CASE("a one-link arm under constant torque reaches (tau - k_c) / k_v") {
  const ManipulatorModel m = without_gravity(ManipulatorModel::DefaultOneLink());
  const double tau = 1.0;
  const double terminal = (tau - m.friction().coulomb(0)) / m.friction().viscous(0);
  for (Integrator integrator : {Integrator::kSemiImplicitEuler, Integrator::kRk4}) {
    SimConfig cfg;
    cfg.integrator = integrator;
    const RobotState end = run_for(m, RobotState{0.0, vec({0.0}), vec({0.0})}, 40.0, cfg,
                                   [&](const RobotState&) { return vec({tau}); });
    CHECK(end.qd(0) == doctest::Approx(terminal).epsilon(1e-6));
  }

  // Below breakaway the link does not start.
  SimConfig cfg;
  const RobotState held = run_for(m, RobotState{0.0, vec({0.0}), vec({0.0})}, 1.0, cfg,
                                  [](const RobotState&) { return vec({0.35}); });
  CHECK(held.qd(0) == 0.0);
  CHECK(held.q(0) == 0.0);
}

TEST_CASE("semi-implicit Euler converges at first order on a smooth segment") {
  // Constant torque and no gravity: the input is exact under a zero-order
  // hold and both joints keep moving forward, so nothing switches.
  const ManipulatorModel m = without_gravity(ManipulatorModel::DefaultTwoLink());
  const RobotState start{0.0, vec({0.2, -0.4}), vec({1.5, 1.0})};
  const JointVector tau = vec({2.0, 1.0});
  auto final_state = [&](double dt, Integrator integrator) {
    SimConfig cfg;
    cfg.dt_s = dt;
    cfg.integrator = integrator;
    const RobotState end = run_for(m, start, 0.5, cfg, [&](const RobotState&) { return tau; });
    JointVector x(4);
    x << end.q, end.qd;
    return x;
  };
  const JointVector ref = final_state(1e-3 / 64, Integrator::kRk4);
  const double e1 = (final_state(2e-3, Integrator::kSemiImplicitEuler) - ref).norm();
  const double e2 = (final_state(1e-3, Integrator::kSemiImplicitEuler) - ref).norm();
  const double e3 = (final_state(5e-4, Integrator::kSemiImplicitEuler) - ref).norm();
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.2));

  // The RK4 variant is far more accurate when nothing switches.
  const double r1 = (final_state(2e-3, Integrator::kRk4) - ref).norm();
  const double r2 = (final_state(1e-3, Integrator::kRk4) - ref).norm();
  CHECK(r1 / r2 > 8.0);
  CHECK(r2 < 1e-3 * e2);
}

TEST_CASE("passive motion without gravity loses kinetic energy") {
  const ManipulatorModel m = without_gravity(ManipulatorModel::DefaultTwoLink());
  SimConfig cfg;
  RobotState s{0.0, vec({0.1, 0.5}), vec({2.0, -3.0})};
  double prev = kinetic_energy(m, s.q, s.qd);
  bool monotone = true;
  for (int k = 0; k < 10000; ++k) {
    s = step(m, s, JointVector::Zero(2), cfg);
    const double e = kinetic_energy(m, s.q, s.qd);
    if (e > prev * (1.0 + 1e-9)) monotone = false;
    prev = e;
  }
  CHECK(monotone);
  CHECK(prev < 1e-6);
}

TEST_CASE("held joints are always within the static friction bound") {
  const ExperimentConfig cfg = default_config();
  const ManipulatorModel m = cfg.model();
  const JointVector kc = m.friction().coulomb;
  SimConfig sim;
  RobotState s{0.0, vec({0.0, 0.0}), vec({0.0, 0.0})};
  int held_steps = 0, all_held = 0;
  for (int k = 0; k < 20000; ++k) {
    // Slow torque sweep around gravity compensation: joints stick and slip.
    const double t = k * sim.dt_s;
    const JointVector tau = gravity_vector(m, s.q) +
                            vec({0.6 * std::sin(0.9 * t), 0.35 * std::sin(1.7 * t + 0.4)});
    const StepResult r = step_detailed(m, s, tau, sim);
    for (int i = 0; i < 2; ++i) {
      if (r.stuck[i]) {
        ++held_steps;
        CHECK(std::abs(r.friction(i)) <= kc(i) * (1.0 + 1e-12));
        CHECK(r.state.qd(i) == 0.0);
      }
    }
    if (s.qd.isZero(0.0) && r.stuck[0] && r.stuck[1]) {
      ++all_held;
      const JointVector net = tau - coriolis_matrix(m, s.q, s.qd) * s.qd - gravity_vector(m, s.q);
      CHECK((net.cwiseAbs().array() <= kc.array() * (1.0 + 1e-12)).all());
    }
    s = r.state;
  }
  CHECK(held_steps > 1000);
  CHECK(all_held > 100);
}

TEST_CASE("a non-finite plant state raises a divergence error with its time") {
  const ManipulatorModel m = ManipulatorModel::DefaultTwoLink();
  SimConfig cfg;
  const RobotState s{0.25, vec({0.0, 0.0}), vec({1.0, 1.0})};
  const double huge = std::numeric_limits<double>::max();
  try {
    step(m, s, vec({huge, -huge}), cfg);
    FAIL("expected a divergence error");
  } catch (const DivergenceError& e) {
    CHECK(e.time_s() == doctest::Approx(0.25 + cfg.dt_s));
  }
}

TEST_CASE("sim config rejects bad steps") {
  SimConfig cfg;
  cfg.dt_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.dt_s = 0.01;
  cfg.duration_s = 0.001;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg.duration_s = 1.0;
  CHECK(cfg.step_count() == 100);
}

TEST_CASE("closed-loop runs are deterministic and log every grid point") {
  ExperimentConfig cfg = default_config();
  cfg.sim.duration_s = 5.0;
  const ManipulatorModel m = cfg.model();
  const ExperimentLog a = run_closed_loop(m, cfg.setup(LearningMode::kCel), cfg.sim);
  const ExperimentLog b = run_closed_loop(m, cfg.setup(LearningMode::kCel), cfg.sim);
  CHECK(a == b);
  CHECK(a.rows() == 5001);
  CHECK(a.t.front() == 0.0);
  CHECK(a.t.back() == doctest::Approx(5.0).epsilon(1e-15));
  for (std::size_t r = 1; r < a.rows(); ++r) REQUIRE(a.t[r] > a.t[r - 1]);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    // The torque decomposition adds up exactly.
    for (int j = 0; j < 2; ++j) {
      REQUIRE(a.at(a.tau, r, j) ==
              a.at(a.tau_fb, r, j) + a.at(a.tau_ff, r, j) + a.at(a.tau_fc, r, j));
    }
  }
  for (const auto* col : {&a.q, &a.qd, &a.e1, &a.e2, &a.tau, &a.w_hat_norm, &a.xi_norm,
                          &a.lambda_min_theta}) {
    for (double v : *col) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("the ideal model keeps the tracking error small") {
  ExperimentConfig cfg = default_config();
  cfg.sim.duration_s = 50.0;
  cfg.tasks.resize(1);
  const ManipulatorModel m = cfg.model();
  ClosedLoopSetup setup = cfg.setup(LearningMode::kFel);
  setup.controller.gamma = 0.0;
  setup.w_hat0 = m.true_parameters();
  const ExperimentLog ideal = run_closed_loop(m, setup, cfg.sim);

  setup.w_hat0 = ParamVector();
  const ExperimentLog pd = run_closed_loop(m, setup, cfg.sim);

  double ideal_peak = 0.0, pd_peak = 0.0;
  for (std::size_t r = 0; r < ideal.rows(); ++r) {
    ideal_peak = std::max(ideal_peak, ideal.row(ideal.e1, r).norm());
    pd_peak = std::max(pd_peak, pd.row(pd.e1, r).norm());
  }
  CHECK(ideal_peak < 0.05);
  CHECK(pd_peak > 10.0 * ideal_peak);
}

TEST_CASE("without damping or learning the arm sags under gravity") {
  ExperimentConfig cfg = default_config();
  cfg.sim.duration_s = 20.0;
  cfg.tasks.resize(1);
  cfg.tasks[0].duration_s = 20.0;
  const ManipulatorModel m = cfg.model();
  ClosedLoopSetup setup = cfg.setup(LearningMode::kFel);
  setup.controller.gamma = 0.0;
  setup.controller.lambda2 = JointVector::Constant(2, 1e-9);
  const ExperimentLog log = run_closed_loop(m, setup, cfg.sim);
  const std::size_t last = log.rows() - 1;
  CHECK(log.row(log.e1, last).norm() > 1.0);
}
