#pragma once

#include <string>

#include "cel/control.hpp"
#include "cel/dynamics.hpp"
#include "cel/estimation.hpp"
#include "cel/log.hpp"

namespace cel {

struct RobotState {
  double t = 0.0;
  JointVector q;
  JointVector qd;
};

enum class Integrator { kSemiImplicitEuler, kRk4 };

std::string to_string(Integrator integrator);

struct SimConfig {
  double dt_s = 1e-3;
  double duration_s = 250.0;
  double v_eps = 1e-4;  // rad/s
  Integrator integrator = Integrator::kSemiImplicitEuler;

  void validate() const;
  /// duration / dt, rounded.
  long long step_count() const;
};

struct StepResult {
  RobotState state;
  /// Joints held by static friction during the step.
  std::vector<bool> stuck;
  /// Friction torque applied at the start of the step.
  JointVector friction;
};

/// Advances the plant by one step with tau held. A moving joint whose
/// velocity changes sign inside the step lands at rest; held joints stay at
/// zero velocity. Throws DivergenceError on a non-finite result.
StepResult step_detailed(const ManipulatorModel& model, const RobotState& state,
                         const JointVector& tau, const SimConfig& cfg);

RobotState step(const ManipulatorModel& model, const RobotState& state,
                const JointVector& tau, const SimConfig& cfg);

/// Everything one closed-loop run needs besides the plant.
struct ClosedLoopSetup {
  ControllerConfig controller;
  EstimationConfig estimation;
  CommandSchedule schedule;
  JointVector q0;
  JointVector qd0;
  /// Initial estimate; zero when empty.
  ParamVector w_hat0;
};

/// Simulates plant + controller + learning law from t = 0 to the configured
/// duration, one controller update per plant step. Rows are logged at every
/// grid time including both endpoints.
///
/// Per step: sample x_d, form e1/e2, apply tau, update W_hat with the
/// predictive error from the memory as of t, integrate the plant, then feed
/// the interval into the filters and the memory and test interval excitation.
ExperimentLog run_closed_loop(const ManipulatorModel& model,
                              const ClosedLoopSetup& setup, const SimConfig& cfg);

}  // namespace cel
