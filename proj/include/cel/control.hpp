#pragma once

// Hybrid feedback-feedforward tracking control with learned inverse dynamics.
//
//   e1 = q_d - q,   qr' = qd_d + L1 e1,   e2 = qr' - qd
//   tau = (e1 + L2 e2) + Phi_h(x_d)^T W_h + Phi_f(qr')^T W_f
//   W_hat' = gamma (Phi(x_d, qr') e2 + kappa xi - sigma_s W_hat)
//
// The feedforward regressor only sees the desired trajectory, so it can be
// tabulated ahead of time. FEL drops the kappa xi term.

#include <string>
#include <vector>

#include "cel/dynamics.hpp"

namespace cel {

enum class LearningMode { kFel, kCel };

std::string to_string(LearningMode mode);

struct ControllerConfig {
  JointVector lambda1;  // 1/s, diagonal
  JointVector lambda2;  // N·m·s/rad, diagonal
  double gamma = 0.15;
  double kappa = 0.5;
  double sigma0 = 0.1;
  double c_w = 5.0;
  LearningMode mode = LearningMode::kCel;

  /// Gains must be positive; gamma and kappa may be zero to switch learning
  /// (or the memory term) off.
  void validate(int dof) const;

  /// Lambda1 = diag(4, ...), Lambda2 = diag(6, ...), gamma 0.15, kappa 0.5,
  /// sigma0 0.1, with c_w = 1.5 ||W|| of the given model.
  static ControllerConfig Defaults(const ManipulatorModel& model, LearningMode mode);
};

struct DesiredState {
  JointVector q;
  JointVector qd;
  JointVector qdd;
};

struct TrackingErrors {
  JointVector e1;
  JointVector e2;
  JointVector qr_dot;
  JointVector qr_ddot;
};

/// Per-joint generator q_d'' = -36 q_d - 12 q_d' + 36 q_c, a critically
/// damped (s + 6)^2 prefilter on the step command.
struct ReferenceState {
  JointVector q;
  JointVector qd;
};

/// Desired state at the generator's current point for command q_c.
DesiredState reference_sample(const ReferenceState& state, const JointVector& q_c);

/// Advances the generator by dt with q_c held (exact discretization) and
/// returns the desired state at the new time.
DesiredState reference_step(ReferenceState& state, const JointVector& q_c, double dt);

TrackingErrors tracking_errors(const DesiredState& desired, const JointVector& q,
                               const JointVector& qd, const JointVector& lambda1);

/// Phi_h(x_d) = Phi_h(q_d, qd_d, qd_d, qdd_d), the part that can be stored offline.
Matrix feedforward_regressor(const ManipulatorModel& model, const DesiredState& desired);

/// Phi(x_d, qr') = [Phi_h(x_d); Phi_f(qr')].
RegressorMatrix learning_regressor(const ManipulatorModel& model,
                                   const DesiredState& desired,
                                   const JointVector& qr_dot);

struct TorqueComponents {
  JointVector feedback;     // e1 + L2 e2
  JointVector feedforward;  // Phi_h(x_d)^T W_h
  JointVector friction;     // Phi_f(qr')^T W_f
  JointVector total;
};

TorqueComponents control_torque(const ControllerConfig& cfg,
                                const ManipulatorModel& model,
                                const TrackingErrors& errors,
                                const DesiredState& desired,
                                const ParamVector& w_hat);

/// Same, with Phi_h(x_d) supplied by the caller (e.g. from a table).
TorqueComponents control_torque(const ControllerConfig& cfg,
                                const Matrix& feedforward_phi,
                                const TrackingErrors& errors,
                                const ParamVector& w_hat);

/// Switching leakage: 0 below c_w, sigma0 above 2 c_w, linear in between.
double sigma_s(const ParamVector& w_hat, double sigma0, double c_w);

/// One explicit-Euler step of the update law. `xi` is ignored in FEL mode.
/// Throws DivergenceError (time NaN) on a non-finite result.
ParamVector update_law(const ControllerConfig& cfg, const ManipulatorModel& model,
                       const TrackingErrors& errors, const DesiredState& desired,
                       const ParamVector& xi, const ParamVector& w_hat, double dt);

/// Piecewise-constant command q_c(t): a list of tasks, each a sequence of
/// steps relative to the task start.
struct CommandStep {
  double at_s = 0.0;
  JointVector q_c;
};

struct Task {
  double duration_s = 0.0;
  std::vector<CommandStep> steps;
};

class CommandSchedule {
 public:
  CommandSchedule() = default;
  /// `hold` is the command before the first step (and throughout if there
  /// are no tasks).
  CommandSchedule(JointVector hold, std::vector<Task> tasks);

  const std::vector<Task>& tasks() const { return tasks_; }
  double total_duration() const;
  double task_start(std::size_t i) const { return starts_.at(i); }

  /// Command at time t.
  JointVector command_at(double t) const;
  /// Index of the task containing t (half-open, the end time belongs to the
  /// last task), or -1 when there are no tasks.
  int task_at(double t) const;

 private:
  JointVector hold_;
  std::vector<Task> tasks_;
  std::vector<double> starts_;
};

}  // namespace cel
