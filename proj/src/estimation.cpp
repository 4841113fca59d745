#include "cel/estimation.hpp"

#include <cmath>
#include <string>

#include "cel/errors.hpp"

namespace cel {

void EstimationConfig::validate() const {
  if (!(alpha_per_s > 0.0) || !std::isfinite(alpha_per_s)) {
    throw InvalidInput("alpha_per_s must be > 0");
  }
  if (!(tau_d_s > 0.0) || !std::isfinite(tau_d_s)) {
    throw InvalidInput("tau_d_s must be > 0");
  }
  if (!(sigma_e > 0.0) || !std::isfinite(sigma_e)) {
    throw InvalidInput("sigma_e must be > 0");
  }
  if (recompute_every < 1) throw InvalidInput("recompute_every must be >= 1");
}

LowPassState lowpass_step(const LowPassState& state, const Matrix& u, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be > 0");
  if (!(state.alpha > 0.0)) throw InvalidInput("alpha must be > 0");
  if (state.y.rows() != u.rows() || state.y.cols() != u.cols()) {
    throw InvalidInput("lowpass input shape does not match the filter state");
  }
  const double decay = std::exp(-state.alpha * dt);
  LowPassState next{state.alpha, decay * state.y + (1.0 - decay) * u};
  return next;
}

FilteredRegressor::FilteredRegressor(const ManipulatorModel& model,
                                     double alpha_per_s)
    : model_(&model) {
  const int p = model.param_count();
  const int n = model.dof();
  momentum_rate_ = {alpha_per_s, Matrix::Zero(p, n)};
  remainder_ = {alpha_per_s, Matrix::Zero(p, n)};
  tau_ = {alpha_per_s, Matrix::Zero(n, 1)};
}

void FilteredRegressor::advance(const JointVector& q0, const JointVector& qd0,
                                const JointVector& tau, const JointVector& q1,
                                const JointVector& qd1, double dt) {
  const ManipulatorModel& m = *model_;
  const Matrix rate =
      (momentum_regressor(m, q1, qd1) - momentum_regressor(m, q0, qd0)) / dt;
  momentum_rate_ = lowpass_step(momentum_rate_, rate, dt);
  remainder_ = lowpass_step(remainder_, momentum_remainder_regressor(m, q0, qd0), dt);
  tau_ = lowpass_step(tau_, tau, dt);
}

ExcitationMemory::ExcitationMemory(int param_count, double tau_d_s, double dt,
                                   int recompute_every)
    : p_(param_count), dt_(dt), recompute_every_(recompute_every) {
  if (param_count < 1) throw InvalidInput("param_count must be >= 1");
  if (!(dt > 0.0) || !(tau_d_s >= dt)) {
    throw InvalidInput("memory needs dt > 0 and tau_d >= dt");
  }
  if (recompute_every < 1) throw InvalidInput("recompute_every must be >= 1");
  capacity_ = static_cast<std::size_t>(std::llround(tau_d_s / dt)) + 1;
  ring_.resize(capacity_);
  sum_outer_ = Matrix::Zero(p_, p_);
  sum_cross_ = ParamVector::Zero(p_);
  theta_ = Matrix::Zero(p_, p_);
  b_ = ParamVector::Zero(p_);
}

void ExcitationMemory::update(const RegressorMatrix& phi_f, const JointVector& tau_f) {
  if (phi_f.rows() != p_ || phi_f.cols() != tau_f.size()) {
    throw InvalidInput("memory sample has the wrong shape");
  }
  Sample s;
  const Matrix outer = phi_f * phi_f.transpose();
  s.outer = 0.5 * (outer + outer.transpose());
  s.cross = phi_f * tau_f;

  if (count_ == capacity_) {
    sum_outer_ -= ring_[head_].outer;
    sum_cross_ -= ring_[head_].cross;
    head_ = (head_ + 1) % capacity_;
    --count_;
  }
  const std::size_t slot = (head_ + count_) % capacity_;
  sum_outer_ += s.outer;
  sum_cross_ += s.cross;
  ring_[slot] = std::move(s);
  ++count_;
  ++samples_seen_;

  if (++since_recompute_ >= recompute_every_) recompute_sums();
  refresh_integrals();
  lambda_min_cache_.reset();
}

void ExcitationMemory::recompute_sums() {
  sum_outer_.setZero();
  sum_cross_.setZero();
  for (std::size_t i = 0; i < count_; ++i) {
    const Sample& s = ring_[(head_ + i) % capacity_];
    sum_outer_ += s.outer;
    sum_cross_ += s.cross;
  }
  since_recompute_ = 0;
}

void ExcitationMemory::refresh_integrals() {
  if (count_ < 2) {
    theta_.setZero();
    b_.setZero();
    return;
  }
  const Sample& first = ring_[head_];
  const Sample& last = ring_[(head_ + count_ - 1) % capacity_];
  theta_ = dt_ * (sum_outer_ - 0.5 * (first.outer + last.outer));
  b_ = dt_ * (sum_cross_ - 0.5 * (first.cross + last.cross));
}

double ExcitationMemory::window_span() const {
  return count_ < 2 ? 0.0 : static_cast<double>(count_ - 1) * dt_;
}

double ExcitationMemory::lambda_min() const {
  if (!lambda_min_cache_) lambda_min_cache_ = min_eigenvalue(theta_);
  return *lambda_min_cache_;
}

bool ExcitationMemory::check_interval_excitation(double sigma_e) {
  if (!(sigma_e > 0.0)) throw InvalidInput("sigma_e must be > 0");
  if (frozen_) return true;
  if (lambda_min() >= sigma_e) {
    frozen_ = Frozen{theta_, b_, time()};
    return true;
  }
  return false;
}

ExcitationMemory memory_update(ExcitationMemory mem, const RegressorMatrix& phi_f,
                               const JointVector& tau_f) {
  mem.update(phi_f, tau_f);
  return mem;
}

bool ie_detect(ExcitationMemory& mem, double sigma_e) {
  return mem.check_interval_excitation(sigma_e);
}

ParamVector predictive_error(const ExcitationMemory& mem, const ParamVector& w_hat) {
  if (w_hat.size() != mem.param_count()) {
    throw InvalidInput("w_hat has the wrong dimension");
  }
  if (mem.frozen()) return mem.frozen()->b - mem.frozen()->theta * w_hat;
  return mem.b() - mem.theta() * w_hat;
}

JointVector predicted_filtered_torque(const RegressorMatrix& phi_f,
                                      const ParamVector& w_hat) {
  if (phi_f.rows() != w_hat.size()) {
    throw InvalidInput("regressor and parameter dimensions disagree");
  }
  return phi_f.transpose() * w_hat;
}

double min_eigenvalue(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

}  // namespace cel
