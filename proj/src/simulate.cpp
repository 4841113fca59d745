#include "cel/simulate.hpp"

#include <cmath>
#include <sstream>

#include "cel/errors.hpp"

namespace cel {
namespace {

struct Derivative {
  JointVector dq;
  JointVector dqd;
};

// Projects velocities after a step: held joints stay at rest and moving
// joints that reverse inside the step stop at zero.
void project_velocity(const JointVector& qd_before, const std::vector<bool>& stuck,
                      double v_eps, JointVector& qd_after) {
  for (Eigen::Index i = 0; i < qd_after.size(); ++i) {
    if (stuck[i]) {
      qd_after(i) = 0.0;
      continue;
    }
    const bool was_moving = qd_before(i) != 0.0 && std::abs(qd_before(i)) >= v_eps;
    if (was_moving && sgn(qd_after(i)) != sgn(qd_before(i))) qd_after(i) = 0.0;
  }
}

}  // namespace

std::string to_string(Integrator integrator) {
  return integrator == Integrator::kRk4 ? "rk4-with-stiction-projection"
                                        : "semi-implicit-euler";
}

void SimConfig::validate() const {
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) throw InvalidInput("dt_s must be > 0");
  if (!(duration_s >= dt_s) || !std::isfinite(duration_s)) {
    throw InvalidInput("duration_s must be >= dt_s");
  }
  if (!(v_eps >= 0.0) || !std::isfinite(v_eps)) throw InvalidInput("v_eps must be >= 0");
}

long long SimConfig::step_count() const { return std::llround(duration_s / dt_s); }

StepResult step_detailed(const ManipulatorModel& model, const RobotState& state,
                         const JointVector& tau, const SimConfig& cfg) {
  const double dt = cfg.dt_s;
  const ForwardDynamicsResult fd =
      solve_forward_dynamics(model, state.q, state.qd, tau, cfg.v_eps);

  StepResult out;
  out.stuck = fd.stuck;
  out.friction = fd.friction;
  out.state.t = state.t + dt;

  if (cfg.integrator == Integrator::kSemiImplicitEuler) {
    out.state.qd = state.qd + dt * fd.qdd;
    project_velocity(state.qd, fd.stuck, cfg.v_eps, out.state.qd);
    out.state.q = state.q + dt * out.state.qd;
  } else {
    // Friction assignment (held set and Coulomb directions) frozen over the
    // step so the substeps never straddle the discontinuity.
    const auto& fr = model.friction();
    JointVector direction(model.dof());
    JointVector qd0 = state.qd;
    for (int i = 0; i < model.dof(); ++i) {
      if (fd.stuck[i]) {
        direction(i) = 0.0;
        qd0(i) = 0.0;
      } else {
        direction(i) = (fd.friction(i) - fr.viscous(i) * state.qd(i)) / fr.coulomb(i);
      }
    }
    auto deriv = [&](const JointVector& q, const JointVector& qd) {
      return Derivative{qd, constrained_acceleration(model, q, qd, tau, fd.stuck,
                                                     direction)};
    };
    const Derivative k1 = deriv(state.q, qd0);
    const Derivative k2 = deriv(state.q + 0.5 * dt * k1.dq, qd0 + 0.5 * dt * k1.dqd);
    const Derivative k3 = deriv(state.q + 0.5 * dt * k2.dq, qd0 + 0.5 * dt * k2.dqd);
    const Derivative k4 = deriv(state.q + dt * k3.dq, qd0 + dt * k3.dqd);
    out.state.q = state.q + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    out.state.qd = qd0 + dt / 6.0 * (k1.dqd + 2.0 * k2.dqd + 2.0 * k3.dqd + k4.dqd);
    project_velocity(state.qd, fd.stuck, cfg.v_eps, out.state.qd);
  }

  if (!out.state.q.allFinite() || !out.state.qd.allFinite()) {
    std::ostringstream msg;
    msg << "plant state became non-finite at t = " << out.state.t << " s";
    throw DivergenceError(msg.str(), out.state.t);
  }
  return out;
}

RobotState step(const ManipulatorModel& model, const RobotState& state,
                const JointVector& tau, const SimConfig& cfg) {
  return step_detailed(model, state, tau, cfg).state;
}

ExperimentLog run_closed_loop(const ManipulatorModel& model,
                              const ClosedLoopSetup& setup, const SimConfig& cfg) {
  const int n = model.dof();
  const int p = model.param_count();
  cfg.validate();
  setup.controller.validate(n);
  setup.estimation.validate();
  require_joint_vector(setup.q0, n, "q0");
  require_joint_vector(setup.qd0, n, "qd0");

  const ControllerConfig& ctl = setup.controller;
  const std::string name = to_string(ctl.mode);
  const double dt = cfg.dt_s;
  const long long steps = cfg.step_count();
  const ParamVector& w_true = model.true_parameters();

  RobotState state{0.0, setup.q0, setup.qd0};
  ReferenceState reference{setup.q0, JointVector::Zero(n)};
  ParamVector w_hat = setup.w_hat0.size() == 0 ? ParamVector::Zero(p) : setup.w_hat0;
  require_joint_vector(w_hat, p, "w_hat0");

  FilteredRegressor filter(model, setup.estimation.alpha_per_s);
  ExcitationMemory memory(p, setup.estimation.tau_d_s, dt,
                          setup.estimation.recompute_every);
  memory.update(filter.phi(), filter.tau());

  ExperimentLog log;
  log.controller = name;
  log.dof = n;
  const auto rows = static_cast<std::size_t>(steps + 1);
  for (auto* col : {&log.q, &log.qd, &log.q_d, &log.e1, &log.e2, &log.tau,
                    &log.tau_fb, &log.tau_ff, &log.tau_fc}) {
    col->reserve(rows * n);
  }
  for (auto* col : {&log.t, &log.w_hat_norm, &log.w_tilde_norm, &log.lambda_min_theta,
                    &log.xi_norm, &log.friction_mismatch_norm, &log.memory_residual}) {
    col->reserve(rows);
  }
  log.task.reserve(rows);
  log.ie_frozen.reserve(rows);

  auto push = [](std::vector<double>& col, const JointVector& v) {
    col.insert(col.end(), v.data(), v.data() + v.size());
  };

  try {
    for (long long k = 0;; ++k) {
      const double t = static_cast<double>(k) * dt;
      state.t = t;
      const JointVector q_c = setup.schedule.command_at(t);
      const DesiredState desired = reference_sample(reference, q_c);
      const TrackingErrors errors =
          tracking_errors(desired, state.q, state.qd, ctl.lambda1);
      const TorqueComponents torque =
          control_torque(ctl, model, errors, desired, w_hat);
      const ParamVector xi = predictive_error(memory, w_hat);

      log.t.push_back(t);
      log.task.push_back(setup.schedule.task_at(t));
      push(log.q, state.q);
      push(log.qd, state.qd);
      push(log.q_d, desired.q);
      push(log.e1, errors.e1);
      push(log.e2, errors.e2);
      push(log.tau, torque.total);
      push(log.tau_fb, torque.feedback);
      push(log.tau_ff, torque.feedforward);
      push(log.tau_fc, torque.friction);
      log.w_hat_norm.push_back(w_hat.norm());
      log.w_tilde_norm.push_back((w_true - w_hat).norm());
      log.lambda_min_theta.push_back(memory.lambda_min());
      log.xi_norm.push_back(xi.norm());
      log.friction_mismatch_norm.push_back(
          (friction_torque(model.friction(), state.qd) - torque.friction).norm());
      const double b_norm = memory.b().norm();
      log.memory_residual.push_back(
          b_norm > 0.0 ? (memory.theta() * w_true - memory.b()).norm() / b_norm : 0.0);
      log.ie_frozen.push_back(memory.frozen() ? 1 : 0);

      if (k == steps) break;

      const ParamVector w_next =
          update_law(ctl, model, errors, desired, xi, w_hat, dt);
      const RobotState next = step(model, state, torque.total, cfg);
      filter.advance(state.q, state.qd, torque.total, next.q, next.qd, dt);
      memory.update(filter.phi(), filter.tau());
      memory.check_interval_excitation(setup.estimation.sigma_e);
      reference_step(reference, q_c, dt);
      state = next;
      w_hat = w_next;
    }
  } catch (const DivergenceError& e) {
    std::ostringstream msg;
    msg << name << " controller diverged at t = " << state.t << " s: " << e.what();
    throw DivergenceError(msg.str(), state.t);
  }
  return log;
}

}  // namespace cel
