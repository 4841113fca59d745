#pragma once

// Filtered-regressor data memory for composite learning.
//
// The plant model tau = Phi^T(q, qd, qdd) W is passed through the first-order
// filter alpha / (s + alpha) on both sides, giving tau_F = Phi_F^T W without
// needing joint accelerations. Windowed integrals of Phi_F Phi_F^T and
// Phi_F tau_F then form the excitation matrix Theta and the vector b with
// Theta W = b; once lambda_min(Theta) reaches sigma_e the pair is frozen and
// drives the generalized predictive error xi = b - Theta W_hat.

#include <cstddef>
#include <optional>
#include <vector>

#include "cel/dynamics.hpp"

namespace cel {

struct EstimationConfig {
  double alpha_per_s = 5.0;
  double tau_d_s = 4.0;
  double sigma_e = 0.2;
  /// Full recomputation cadence of the windowed sums, in samples.
  int recompute_every = 100;

  void validate() const;
};

struct LowPassState {
  double alpha = 1.0;
  Matrix y;  // same shape as the input
};

/// Exact zero-order-hold step of alpha / (s + alpha):
/// y+ = exp(-alpha dt) y + (1 - exp(-alpha dt)) u.
LowPassState lowpass_step(const LowPassState& state, const Matrix& u, double dt);

/// Runs the filter on the acceleration-free regressor split of the plant.
///
/// Each interval [t_k, t_k + dt] is fed with the torque held over it and the
/// states at both ends. The momentum term enters through its finite-difference
/// rate, which is the filtered derivative alpha s / (s + alpha) of P^T W.
class FilteredRegressor {
 public:
  FilteredRegressor(const ManipulatorModel& model, double alpha_per_s);

  void advance(const JointVector& q0, const JointVector& qd0,
               const JointVector& tau, const JointVector& q1,
               const JointVector& qd1, double dt);

  /// Phi_F, (N + 2n) x n.
  RegressorMatrix phi() const { return momentum_rate_.y + remainder_.y; }
  JointVector tau() const { return tau_.y.col(0); }

 private:
  const ManipulatorModel* model_;
  LowPassState momentum_rate_;
  LowPassState remainder_;
  LowPassState tau_;
};

/// Sliding-window trapezoid integrals of Phi_F Phi_F^T (Theta) and
/// Phi_F tau_F (b) over the last tau_d seconds, with a one-shot freeze.
class ExcitationMemory {
 public:
  struct Frozen {
    Matrix theta;
    ParamVector b;
    double t_e;
  };

  ExcitationMemory(int param_count, double tau_d_s, double dt,
                   int recompute_every = 100);

  /// Appends the sample at the next grid time and evicts samples older than
  /// tau_d. The first sample is taken to be at t = 0.
  void update(const RegressorMatrix& phi_f, const JointVector& tau_f);

  const Matrix& theta() const { return theta_; }
  const ParamVector& b() const { return b_; }
  const std::optional<Frozen>& frozen() const { return frozen_; }

  double lambda_min() const;
  /// Time of the newest sample; -dt before the first sample.
  double time() const { return static_cast<double>(samples_seen_ - 1) * dt_; }
  std::size_t window_size() const { return count_; }
  double window_span() const;
  int param_count() const { return p_; }

  /// Freezes (Theta, b, t) the first time lambda_min(Theta) >= sigma_e.
  /// Returns whether the current Theta satisfies the bound; after the freeze
  /// it reports the frozen state, which always does.
  bool check_interval_excitation(double sigma_e);

 private:
  struct Sample {
    Matrix outer;
    ParamVector cross;
  };

  void recompute_sums();
  void refresh_integrals();

  int p_;
  double dt_;
  std::size_t capacity_;
  int recompute_every_;
  std::vector<Sample> ring_;
  std::size_t head_ = 0;  // index of the oldest sample
  std::size_t count_ = 0;
  long long samples_seen_ = 0;
  int since_recompute_ = 0;
  Matrix sum_outer_;
  ParamVector sum_cross_;
  Matrix theta_;
  ParamVector b_;
  std::optional<Frozen> frozen_;
  mutable std::optional<double> lambda_min_cache_;
};

/// Functional form of ExcitationMemory::update.
ExcitationMemory memory_update(ExcitationMemory mem, const RegressorMatrix& phi_f,
                               const JointVector& tau_f);

/// lambda_min(Theta) >= sigma_e; the first success freezes the memory.
bool ie_detect(ExcitationMemory& mem, double sigma_e);

/// xi = b - Theta W_hat, using the frozen pair once it exists.
ParamVector predictive_error(const ExcitationMemory& mem, const ParamVector& w_hat);

/// Phi_F^T W_hat.
JointVector predicted_filtered_torque(const RegressorMatrix& phi_f,
                                      const ParamVector& w_hat);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& symmetric);

}  // namespace cel
