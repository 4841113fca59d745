#pragma once

// Rigid-body model of a planar revolute arm (1 or 2 links) moving in a
// vertical plane, with viscous plus Coulomb joint friction:
//
//   M(q) q'' + C(q, q') q' + G(q) + F(q') = tau
//
// Joint angles: q1 is measured from the horizontal, q2 relative to link 1.
// The rigid-body part is linear in a grouped parameter vector W_h and the
// friction part in W_f = [k_v; k_c], so the full parameter vector is
// W = [W_h; k_v; k_c] of length N + 2n.

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cel {

using JointVector = Eigen::VectorXd;
using ParamVector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Regressor Phi with Phi^T W giving a joint torque. Shape (N + 2n) x n.
using RegressorMatrix = Eigen::MatrixXd;

struct LinkParams {
  double mass_kg = 1.0;
  double length_m = 1.0;
  double com_m = 0.5;  // distance from the joint axis to the center of mass
  double inertia_kgm2 = 1.0 / 12.0;  // about the center of mass
};

struct FrictionParams {
  JointVector viscous;  // k_v, N·m·s/rad
  JointVector coulomb;  // k_c, N·m
};

/// Inertia-matrix eigenvalue bracket m0 <= lambda(M(q)) <= m_bar.
struct InertiaBounds {
  double lower;
  double upper;
};

class ManipulatorModel {
 public:
  /// Throws InvalidInput on non-positive link data, friction coefficients,
  /// or a link count other than 1 or 2.
  ManipulatorModel(std::vector<LinkParams> links, double gravity_mps2,
                   FrictionParams friction);

  /// m = 1 kg, l = 1 m, lc = l/2, rod inertias, g = 9.81,
  /// k_v = (0.5, 0.3), k_c = (0.4, 0.2).
  static ManipulatorModel DefaultTwoLink();
  /// Single rod with the first link's default data, k_v = 0.5, k_c = 0.4.
  static ManipulatorModel DefaultOneLink();

  int dof() const { return static_cast<int>(links_.size()); }
  /// N, the length of W_h.
  int rigid_param_count() const { return dof() == 1 ? 2 : 5; }
  /// N + 2n.
  int param_count() const { return rigid_param_count() + 2 * dof(); }

  const std::vector<LinkParams>& links() const { return links_; }
  double gravity() const { return gravity_; }
  const FrictionParams& friction() const { return friction_; }
  const ParamVector& true_parameters() const { return true_w_; }
  const InertiaBounds& inertia_bounds() const { return inertia_bounds_; }

 private:
  std::vector<LinkParams> links_;
  double gravity_;
  FrictionParams friction_;
  ParamVector true_w_;
  InertiaBounds inertia_bounds_{};
};

/// sgn with sgn(0) = 0.
double sgn(double x);

Matrix mass_matrix(const ManipulatorModel& model, const JointVector& q);

/// dM/dq_k.
Matrix mass_matrix_partial(const ManipulatorModel& model, const JointVector& q,
                           int k);

/// Built from the Christoffel symbols of M, so Mdot - 2C is skew-symmetric.
Matrix coriolis_matrix(const ManipulatorModel& model, const JointVector& q,
                       const JointVector& qd);

JointVector gravity_vector(const ManipulatorModel& model, const JointVector& q);

double potential_energy(const ManipulatorModel& model, const JointVector& q);

/// k_v .* qd + k_c .* sgn(qd).
JointVector friction_torque(const FrictionParams& friction,
                            const JointVector& qd);

/// H(q, qd, v, vdot) = M(q) vdot + C(q, qd) v + G(q).
JointVector lumped_h(const ManipulatorModel& model, const JointVector& q,
                     const JointVector& qd, const JointVector& v,
                     const JointVector& vdot);

/// Phi_h(q, qd, v, vdot), N x n, with Phi_h^T W_h = lumped_h(...).
Matrix rigid_regressor(const ManipulatorModel& model, const JointVector& q,
                       const JointVector& qd, const JointVector& v,
                       const JointVector& vdot);

/// Phi_f(w) = [diag(w); diag(sgn w)], 2n x n.
Matrix friction_regressor(const JointVector& w);

/// Stacked [Phi_h(q, qd, v, vdot); Phi_f(friction_velocity)].
RegressorMatrix regressor(const ManipulatorModel& model, const JointVector& q,
                          const JointVector& qd, const JointVector& v,
                          const JointVector& vdot,
                          const JointVector& friction_velocity);

/// Same with the friction regressor evaluated at qd.
RegressorMatrix regressor(const ManipulatorModel& model, const JointVector& q,
                          const JointVector& qd, const JointVector& v,
                          const JointVector& vdot);

/// Acceleration-free split of the full regressor used by the filtered
/// estimator: Phi(q, qd, qdd)^T W = d/dt[P(q, qd)^T W] + R(q, qd)^T W, where
/// P^T W = M(q) qd (generalized momentum) and R^T W = -C^T qd + G + F(qd).
RegressorMatrix momentum_regressor(const ManipulatorModel& model,
                                   const JointVector& q, const JointVector& qd);
RegressorMatrix momentum_remainder_regressor(const ManipulatorModel& model,
                                             const JointVector& q,
                                             const JointVector& qd);

struct ForwardDynamicsResult {
  JointVector qdd;
  /// Friction torque actually applied; for stuck joints this is the holding
  /// torque, bounded by k_c.
  JointVector friction;
  std::vector<bool> stuck;
};

/// Solves M qdd = tau - C qd - G - F for qdd with a Karnopp dead zone: joints
/// with |qd_i| < v_eps stay at rest while the torque needed to hold them is
/// within k_c; otherwise Coulomb friction saturates at breakaway.
ForwardDynamicsResult solve_forward_dynamics(const ManipulatorModel& model,
                                             const JointVector& q,
                                             const JointVector& qd,
                                             const JointVector& tau,
                                             double v_eps = 1e-4);

JointVector forward_dynamics(const ManipulatorModel& model,
                             const JointVector& q, const JointVector& qd,
                             const JointVector& tau, double v_eps = 1e-4);

/// Acceleration with a prescribed friction assignment: joints flagged in
/// `stuck` are held (qdd_i = 0); the others see friction k_v qd + k_c d_i.
JointVector constrained_acceleration(const ManipulatorModel& model,
                                     const JointVector& q,
                                     const JointVector& qd,
                                     const JointVector& tau,
                                     const std::vector<bool>& stuck,
                                     const JointVector& coulomb_direction);

double kinetic_energy(const ManipulatorModel& model, const JointVector& q,
                      const JointVector& qd);

/// Throws InvalidInput unless v has `n` finite entries.
void require_joint_vector(const JointVector& v, int n, const char* name);

}  // namespace cel
