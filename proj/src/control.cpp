#include "cel/control.hpp"

#include <cmath>
#include <numeric>

#include "cel/errors.hpp"

namespace cel {
namespace {

constexpr double kGeneratorPole = 6.0;  // (s + 6)^2 = s^2 + 12 s + 36
constexpr double kTimeEps = 1e-9;

}  // namespace

std::string to_string(LearningMode mode) {
  return mode == LearningMode::kFel ? "fel" : "cel";
}

void ControllerConfig::validate(int dof) const {
  require_joint_vector(lambda1, dof, "lambda1");
  require_joint_vector(lambda2, dof, "lambda2");
  if ((lambda1.array() <= 0.0).any()) throw InvalidInput("lambda1 must be > 0");
  if ((lambda2.array() <= 0.0).any()) throw InvalidInput("lambda2 must be > 0");
  if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidInput("gamma must be >= 0");
  if (!std::isfinite(kappa) || kappa < 0.0) throw InvalidInput("kappa must be >= 0");
  if (!std::isfinite(sigma0) || sigma0 <= 0.0) throw InvalidInput("sigma0 must be > 0");
  if (!std::isfinite(c_w) || c_w <= 0.0) throw InvalidInput("c_w must be > 0");
}

ControllerConfig ControllerConfig::Defaults(const ManipulatorModel& model,
                                            LearningMode mode) {
  ControllerConfig cfg;
  cfg.lambda1 = JointVector::Constant(model.dof(), 4.0);
  cfg.lambda2 = JointVector::Constant(model.dof(), 6.0);
  cfg.c_w = 1.5 * model.true_parameters().norm();
  cfg.mode = mode;
  return cfg;
}

DesiredState reference_sample(const ReferenceState& state, const JointVector& q_c) {
  const double a = kGeneratorPole;
  DesiredState d;
  d.q = state.q;
  d.qd = state.qd;
  d.qdd = -a * a * state.q - 2.0 * a * state.qd + a * a * q_c;
  return d;
}

DesiredState reference_step(ReferenceState& state, const JointVector& q_c, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("dt must be > 0");
  require_joint_vector(q_c, static_cast<int>(state.q.size()), "q_c");
  const double a = kGeneratorPole;
  const double decay = std::exp(-a * dt);
  for (Eigen::Index i = 0; i < state.q.size(); ++i) {
    // z = q - q_c solves z'' + 2a z' + a^2 z = 0: z = (z0 + (z0' + a z0) t) e^{-at}
    const double z0 = state.q(i) - q_c(i);
    const double v0 = state.qd(i);
    const double slope = v0 + a * z0;
    state.q(i) = q_c(i) + (z0 + slope * dt) * decay;
    state.qd(i) = (v0 - a * slope * dt) * decay;
  }
  return reference_sample(state, q_c);
}

TrackingErrors tracking_errors(const DesiredState& desired, const JointVector& q,
                               const JointVector& qd, const JointVector& lambda1) {
  TrackingErrors e;
  e.e1 = desired.q - q;
  const JointVector e1_dot = desired.qd - qd;
  e.qr_dot = desired.qd + lambda1.cwiseProduct(e.e1);
  e.e2 = e1_dot + lambda1.cwiseProduct(e.e1);
  e.qr_ddot = desired.qdd + lambda1.cwiseProduct(e1_dot);
  return e;
}

Matrix feedforward_regressor(const ManipulatorModel& model, const DesiredState& desired) {
  return rigid_regressor(model, desired.q, desired.qd, desired.qd, desired.qdd);
}

RegressorMatrix learning_regressor(const ManipulatorModel& model,
                                   const DesiredState& desired,
                                   const JointVector& qr_dot) {
  return regressor(model, desired.q, desired.qd, desired.qd, desired.qdd, qr_dot);
}

TorqueComponents control_torque(const ControllerConfig& cfg,
                                const Matrix& feedforward_phi,
                                const TrackingErrors& errors,
                                const ParamVector& w_hat) {
  const Eigen::Index n = errors.e1.size();
  const Eigen::Index nh = feedforward_phi.rows();
  if (w_hat.size() != nh + 2 * n) throw InvalidInput("w_hat has the wrong dimension");
  TorqueComponents t;
  t.feedback = errors.e1 + cfg.lambda2.cwiseProduct(errors.e2);
  t.feedforward = feedforward_phi.transpose() * w_hat.head(nh);
  t.friction = friction_regressor(errors.qr_dot).transpose() * w_hat.tail(2 * n);
  t.total = t.feedback + t.feedforward + t.friction;
  return t;
}

TorqueComponents control_torque(const ControllerConfig& cfg,
                                const ManipulatorModel& model,
                                const TrackingErrors& errors,
                                const DesiredState& desired,
                                const ParamVector& w_hat) {
  return control_torque(cfg, feedforward_regressor(model, desired), errors, w_hat);
}

double sigma_s(const ParamVector& w_hat, double sigma0, double c_w) {
  if (!(sigma0 > 0.0) || !(c_w > 0.0)) throw InvalidInput("sigma0 and c_w must be > 0");
  const double norm = w_hat.norm();
  if (norm < c_w) return 0.0;
  if (norm > 2.0 * c_w) return sigma0;
  return sigma0 * (norm / c_w - 1.0);
}

ParamVector update_law(const ControllerConfig& cfg, const ManipulatorModel& model,
                       const TrackingErrors& errors, const DesiredState& desired,
                       const ParamVector& xi, const ParamVector& w_hat, double dt) {
  ParamVector drive = learning_regressor(model, desired, errors.qr_dot) * errors.e2;
  if (cfg.mode == LearningMode::kCel) {
    if (xi.size() != w_hat.size()) throw InvalidInput("xi has the wrong dimension");
    drive += cfg.kappa * xi;
  }
  drive -= sigma_s(w_hat, cfg.sigma0, cfg.c_w) * w_hat;
  ParamVector next = w_hat + dt * cfg.gamma * drive;
  if (!next.allFinite()) {
    throw DivergenceError("parameter update produced a non-finite estimate",
                          std::nan(""));
  }
  return next;
}

CommandSchedule::CommandSchedule(JointVector hold, std::vector<Task> tasks)
    : hold_(std::move(hold)), tasks_(std::move(tasks)) {
  double t = 0.0;
  for (const Task& task : tasks_) {
    if (!(task.duration_s > 0.0)) throw InvalidInput("task duration must be > 0");
    double prev = 0.0;
    for (const CommandStep& s : task.steps) {
      if (s.at_s < prev) throw InvalidInput("task steps must be sorted by time");
      prev = s.at_s;
      if (s.q_c.size() != hold_.size()) {
        throw InvalidInput("task command has the wrong dimension");
      }
      if (s.at_s < 0.0 || s.at_s >= task.duration_s) {
        throw InvalidInput("task step time must lie inside the task");
      }
    }
    starts_.push_back(t);
    t += task.duration_s;
  }
}

double CommandSchedule::total_duration() const {
  return std::accumulate(tasks_.begin(), tasks_.end(), 0.0,
                         [](double acc, const Task& t) { return acc + t.duration_s; });
}

int CommandSchedule::task_at(double t) const {
  if (tasks_.empty()) return -1;
  int idx = 0;
  for (std::size_t i = 0; i < starts_.size(); ++i) {
    if (t + kTimeEps >= starts_[i]) idx = static_cast<int>(i);
  }
  return idx;
}

JointVector CommandSchedule::command_at(double t) const {
  // The command persists from one task into the next until overridden.
  JointVector cmd = hold_;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (t + kTimeEps < starts_[i]) break;
    for (const CommandStep& s : tasks_[i].steps) {
      if (t + kTimeEps >= starts_[i] + s.at_s) cmd = s.q_c;
    }
  }
  return cmd;
}

}  // namespace cel
