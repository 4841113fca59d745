#include "cel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cel/errors.hpp"

namespace cel {
namespace {

// Grouped rigid-body parameters, in the order used by W_h.
//   two links: [m1 lc1^2 + I1 + m2 l1^2, m2 lc2^2 + I2, m2 l1 lc2,
//               (m1 lc1 + m2 l1) g, m2 lc2 g]
//   one link:  [m1 lc1^2 + I1, m1 lc1 g]
ParamVector grouped_rigid_parameters(const std::vector<LinkParams>& links,
                                     double g) {
  const LinkParams& a = links[0];
  if (links.size() == 1) {
    ParamVector w(2);
    w << a.mass_kg * a.com_m * a.com_m + a.inertia_kgm2, a.mass_kg * a.com_m * g;
    return w;
  }
  const LinkParams& b = links[1];
  ParamVector w(5);
  w << a.mass_kg * a.com_m * a.com_m + a.inertia_kgm2 +
           b.mass_kg * a.length_m * a.length_m,
      b.mass_kg * b.com_m * b.com_m + b.inertia_kgm2,
      b.mass_kg * a.length_m * b.com_m,
      (a.mass_kg * a.com_m + b.mass_kg * a.length_m) * g,
      b.mass_kg * b.com_m * g;
  return w;
}

InertiaBounds sweep_inertia_bounds(const ManipulatorModel& model) {
  if (model.dof() == 1) {
    const double m = mass_matrix(model, JointVector::Zero(1))(0, 0);
    return {m, m};
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  constexpr int kSamples = 2001;
  JointVector q = JointVector::Zero(2);
  for (int i = 0; i < kSamples; ++i) {
    q(1) = -std::numbers::pi + 2.0 * std::numbers::pi * i / (kSamples - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(mass_matrix(model, q),
                                              Eigen::EigenvaluesOnly);
    lo = std::min(lo, eig.eigenvalues()(0));
    hi = std::max(hi, eig.eigenvalues()(1));
  }
  // Pad for the curvature between grid points.
  return {lo * (1.0 - 1e-3), hi * (1.0 + 1e-3)};
}

void require_positive(double x, const std::string& name) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw InvalidInput(name + " must be finite and > 0");
  }
}

}  // namespace

void require_joint_vector(const JointVector& v, int n, const char* name) {
  if (v.size() != n) {
    throw InvalidInput(std::string(name) + ": expected " + std::to_string(n) +
                       " entries, got " + std::to_string(v.size()));
  }
  if (!v.allFinite()) {
    throw InvalidInput(std::string(name) + ": non-finite entry");
  }
}

ManipulatorModel::ManipulatorModel(std::vector<LinkParams> links,
                                   double gravity_mps2, FrictionParams friction)
    : links_(std::move(links)), gravity_(gravity_mps2), friction_(std::move(friction)) {
  if (links_.empty() || links_.size() > 2) {
    throw InvalidInput("model supports 1 or 2 links, got " +
                       std::to_string(links_.size()));
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const std::string p = "links[" + std::to_string(i) + "].";
    require_positive(links_[i].mass_kg, p + "mass_kg");
    require_positive(links_[i].length_m, p + "length_m");
    require_positive(links_[i].com_m, p + "com_m");
    if (!std::isfinite(links_[i].inertia_kgm2) || links_[i].inertia_kgm2 < 0.0) {
      throw InvalidInput(p + "inertia_kgm2 must be finite and >= 0");
    }
  }
  if (!std::isfinite(gravity_) || gravity_ < 0.0) {
    throw InvalidInput("gravity must be finite and >= 0");
  }
  const int n = dof();
  require_joint_vector(friction_.viscous, n, "friction.viscous");
  require_joint_vector(friction_.coulomb, n, "friction.coulomb");
  if ((friction_.viscous.array() <= 0.0).any() ||
      (friction_.coulomb.array() <= 0.0).any()) {
    throw InvalidInput("friction coefficients must be strictly positive");
  }

  const ParamVector wh = grouped_rigid_parameters(links_, gravity_);
  true_w_.resize(wh.size() + 2 * n);
  true_w_ << wh, friction_.viscous, friction_.coulomb;
  inertia_bounds_ = sweep_inertia_bounds(*this);
}

ManipulatorModel ManipulatorModel::DefaultTwoLink() {
  FrictionParams f{JointVector(2), JointVector(2)};
  f.viscous << 0.5, 0.3;
  f.coulomb << 0.4, 0.2;
  return ManipulatorModel({LinkParams{}, LinkParams{}}, 9.81, f);
}

ManipulatorModel ManipulatorModel::DefaultOneLink() {
  FrictionParams f{JointVector::Constant(1, 0.5), JointVector::Constant(1, 0.4)};
  return ManipulatorModel({LinkParams{}}, 9.81, f);
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// M, dM/dq, and G below are written in the physical link data rather than the
// grouped parameters, so the regressor identity is a genuine cross-check.

Matrix mass_matrix(const ManipulatorModel& model, const JointVector& q) {
  require_joint_vector(q, model.dof(), "q");
  const auto& L = model.links();
  const LinkParams& a = L[0];
  const double i1 = a.mass_kg * a.com_m * a.com_m + a.inertia_kgm2;
  if (model.dof() == 1) return Matrix::Constant(1, 1, i1);

  const LinkParams& b = L[1];
  const double i2 = b.mass_kg * b.com_m * b.com_m + b.inertia_kgm2;
  const double k = b.mass_kg * a.length_m * b.com_m * std::cos(q(1));
  const double m1l1sq = b.mass_kg * a.length_m * a.length_m;
  Matrix m(2, 2);
  m(0, 0) = i1 + m1l1sq + i2 + 2.0 * k;
  m(0, 1) = i2 + k;
  m(1, 0) = m(0, 1);
  m(1, 1) = i2;
  return m;
}

Matrix mass_matrix_partial(const ManipulatorModel& model, const JointVector& q,
                           int k) {
  require_joint_vector(q, model.dof(), "q");
  const int n = model.dof();
  Matrix d = Matrix::Zero(n, n);
  if (n == 2 && k == 1) {
    const auto& L = model.links();
    const double s = -L[1].mass_kg * L[0].length_m * L[1].com_m * std::sin(q(1));
    d(0, 0) = 2.0 * s;
    d(0, 1) = s;
    d(1, 0) = s;
  }
  return d;
}

Matrix coriolis_matrix(const ManipulatorModel& model, const JointVector& q,
                       const JointVector& qd) {
  const int n = model.dof();
  require_joint_vector(q, n, "q");
  require_joint_vector(qd, n, "qd");
  std::vector<Matrix> dm;
  dm.reserve(n);
  for (int i = 0; i < n; ++i) dm.push_back(mass_matrix_partial(model, q, i));

  // C_kj = sum_i c_ijk qd_i,  c_ijk = (dM_kj/dq_i + dM_ki/dq_j - dM_ij/dq_k) / 2
  Matrix c = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += 0.5 * (dm[i](k, j) + dm[j](k, i) - dm[k](i, j)) * qd(i);
      }
      c(k, j) = acc;
    }
  }
  return c;
}

JointVector gravity_vector(const ManipulatorModel& model, const JointVector& q) {
  require_joint_vector(q, model.dof(), "q");
  const auto& L = model.links();
  const double g = model.gravity();
  JointVector out(model.dof());
  if (model.dof() == 1) {
    out(0) = L[0].mass_kg * L[0].com_m * g * std::cos(q(0));
    return out;
  }
  const double c1 = std::cos(q(0));
  const double c12 = std::cos(q(0) + q(1));
  out(1) = L[1].mass_kg * L[1].com_m * g * c12;
  out(0) = (L[0].mass_kg * L[0].com_m + L[1].mass_kg * L[0].length_m) * g * c1 +
           out(1);
  return out;
}

double potential_energy(const ManipulatorModel& model, const JointVector& q) {
  require_joint_vector(q, model.dof(), "q");
  const auto& L = model.links();
  const double g = model.gravity();
  double u = L[0].mass_kg * g * L[0].com_m * std::sin(q(0));
  if (model.dof() == 2) {
    u += L[1].mass_kg * g *
         (L[0].length_m * std::sin(q(0)) + L[1].com_m * std::sin(q(0) + q(1)));
  }
  return u;
}

JointVector friction_torque(const FrictionParams& friction, const JointVector& qd) {
  require_joint_vector(qd, static_cast<int>(friction.viscous.size()), "qd");
  JointVector f(qd.size());
  for (Eigen::Index i = 0; i < qd.size(); ++i) {
    f(i) = friction.viscous(i) * qd(i) + friction.coulomb(i) * sgn(qd(i));
  }
  return f;
}

JointVector lumped_h(const ManipulatorModel& model, const JointVector& q,
                     const JointVector& qd, const JointVector& v,
                     const JointVector& vdot) {
  const int n = model.dof();
  require_joint_vector(v, n, "v");
  require_joint_vector(vdot, n, "vdot");
  return mass_matrix(model, q) * vdot + coriolis_matrix(model, q, qd) * v +
         gravity_vector(model, q);
}

Matrix rigid_regressor(const ManipulatorModel& model, const JointVector& q,
                       const JointVector& qd, const JointVector& v,
                       const JointVector& vdot) {
  const int n = model.dof();
  require_joint_vector(q, n, "q");
  require_joint_vector(qd, n, "qd");
  require_joint_vector(v, n, "v");
  require_joint_vector(vdot, n, "vdot");

  // Stored transposed: column j holds the coefficients of joint j's torque.
  Matrix phi = Matrix::Zero(model.rigid_param_count(), n);
  if (n == 1) {
    phi(0, 0) = vdot(0);
    phi(1, 0) = std::cos(q(0));
    return phi;
  }
  const double c2 = std::cos(q(1));
  const double s2 = std::sin(q(1));
  const double c1 = std::cos(q(0));
  const double c12 = std::cos(q(0) + q(1));

  phi(0, 0) = vdot(0);
  phi(1, 0) = vdot(0) + vdot(1);
  phi(2, 0) = c2 * (2.0 * vdot(0) + vdot(1)) -
              s2 * (qd(1) * v(0) + (qd(0) + qd(1)) * v(1));
  phi(3, 0) = c1;
  phi(4, 0) = c12;

  phi(1, 1) = vdot(0) + vdot(1);
  phi(2, 1) = c2 * vdot(0) + s2 * qd(0) * v(0);
  phi(4, 1) = c12;
  return phi;
}

Matrix friction_regressor(const JointVector& w) {
  const Eigen::Index n = w.size();
  Matrix phi = Matrix::Zero(2 * n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i, i) = w(i);
    phi(n + i, i) = sgn(w(i));
  }
  return phi;
}

RegressorMatrix regressor(const ManipulatorModel& model, const JointVector& q,
                          const JointVector& qd, const JointVector& v,
                          const JointVector& vdot,
                          const JointVector& friction_velocity) {
  const int n = model.dof();
  require_joint_vector(friction_velocity, n, "friction_velocity");
  RegressorMatrix phi(model.param_count(), n);
  phi << rigid_regressor(model, q, qd, v, vdot), friction_regressor(friction_velocity);
  return phi;
}

RegressorMatrix regressor(const ManipulatorModel& model, const JointVector& q,
                          const JointVector& qd, const JointVector& v,
                          const JointVector& vdot) {
  return regressor(model, q, qd, v, vdot, qd);
}

RegressorMatrix momentum_regressor(const ManipulatorModel& model,
                                   const JointVector& q, const JointVector& qd) {
  const int n = model.dof();
  require_joint_vector(q, n, "q");
  require_joint_vector(qd, n, "qd");
  RegressorMatrix p = RegressorMatrix::Zero(model.param_count(), n);
  if (n == 1) {
    p(0, 0) = qd(0);
    return p;
  }
  const double c2 = std::cos(q(1));
  p(0, 0) = qd(0);
  p(1, 0) = qd(0) + qd(1);
  p(2, 0) = c2 * (2.0 * qd(0) + qd(1));
  p(1, 1) = qd(0) + qd(1);
  p(2, 1) = c2 * qd(0);
  return p;
}

RegressorMatrix momentum_remainder_regressor(const ManipulatorModel& model,
                                             const JointVector& q,
                                             const JointVector& qd) {
  const int n = model.dof();
  require_joint_vector(q, n, "q");
  require_joint_vector(qd, n, "qd");
  RegressorMatrix r = RegressorMatrix::Zero(model.param_count(), n);
  if (n == 1) {
    r(1, 0) = std::cos(q(0));
  } else {
    const double c12 = std::cos(q(0) + q(1));
    r(3, 0) = std::cos(q(0));
    r(4, 0) = c12;
    // -C^T qd has a single nonzero entry for the planar 2-link arm.
    r(2, 1) = std::sin(q(1)) * qd(0) * (qd(0) + qd(1));
    r(4, 1) = c12;
  }
  r.bottomRows(2 * n) = friction_regressor(qd);
  return r;
}

JointVector constrained_acceleration(const ManipulatorModel& model,
                                     const JointVector& q,
                                     const JointVector& qd,
                                     const JointVector& tau,
                                     const std::vector<bool>& stuck,
                                     const JointVector& coulomb_direction) {
  const int n = model.dof();
  const auto& fr = model.friction();
  const Matrix m = mass_matrix(model, q);
  JointVector rhs = tau - coriolis_matrix(model, q, qd) * qd - gravity_vector(model, q);
  std::vector<int> free;
  for (int i = 0; i < n; ++i) {
    if (!stuck[i]) {
      free.push_back(i);
      rhs(i) -= fr.viscous(i) * qd(i) + fr.coulomb(i) * coulomb_direction(i);
    }
  }
  JointVector qdd = JointVector::Zero(n);
  if (free.empty()) return qdd;
  const int nf = static_cast<int>(free.size());
  Matrix mff(nf, nf);
  JointVector bf(nf);
  for (int a = 0; a < nf; ++a) {
    bf(a) = rhs(free[a]);
    for (int b = 0; b < nf; ++b) mff(a, b) = m(free[a], free[b]);
  }
  Eigen::LLT<Matrix> llt(mff);
  if (llt.info() != Eigen::Success) {
    throw InternalError("inertia matrix is not positive definite");
  }
  const JointVector xf = llt.solve(bf);
  for (int a = 0; a < nf; ++a) qdd(free[a]) = xf(a);
  return qdd;
}

ForwardDynamicsResult solve_forward_dynamics(const ManipulatorModel& model,
                                             const JointVector& q,
                                             const JointVector& qd,
                                             const JointVector& tau,
                                             double v_eps) {
  const int n = model.dof();
  require_joint_vector(q, n, "q");
  require_joint_vector(qd, n, "qd");
  require_joint_vector(tau, n, "tau");
  if (!std::isfinite(v_eps) || v_eps < 0.0) throw InvalidInput("v_eps must be >= 0");

  const auto& fr = model.friction();
  const Matrix m = mass_matrix(model, q);
  const JointVector bias =
      tau - coriolis_matrix(model, q, qd) * qd - gravity_vector(model, q);

  std::vector<bool> stuck(n, false);
  JointVector direction(n);
  for (int i = 0; i < n; ++i) {
    stuck[i] = std::abs(qd(i)) < v_eps || qd(i) == 0.0;
    direction(i) = sgn(qd(i));
  }

  // Release held joints one at a time, largest breakaway excess first, until
  // every remaining holding torque is within its Coulomb limit.
  JointVector qdd;
  JointVector hold = JointVector::Zero(n);
  for (;;) {
    qdd = constrained_acceleration(model, q, qd, tau, stuck, direction);
    const JointVector net = bias - m * qdd;
    int worst = -1;
    double worst_excess = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!stuck[i]) continue;
      hold(i) = net(i) - fr.viscous(i) * qd(i);
      const double excess = std::abs(hold(i)) - fr.coulomb(i);
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = i;
      }
    }
    if (worst < 0) break;
    stuck[worst] = false;
    direction(worst) = sgn(hold(worst));
  }

  ForwardDynamicsResult out;
  out.qdd = qdd;
  out.stuck = stuck;
  out.friction.resize(n);
  for (int i = 0; i < n; ++i) {
    out.friction(i) = fr.viscous(i) * qd(i) +
                      (stuck[i] ? hold(i) : fr.coulomb(i) * direction(i));
  }
  return out;
}

JointVector forward_dynamics(const ManipulatorModel& model, const JointVector& q,
                             const JointVector& qd, const JointVector& tau,
                             double v_eps) {
  return solve_forward_dynamics(model, q, qd, tau, v_eps).qdd;
}

double kinetic_energy(const ManipulatorModel& model, const JointVector& q,
                      const JointVector& qd) {
  require_joint_vector(qd, model.dof(), "qd");
  return 0.5 * qd.dot(mass_matrix(model, q) * qd);
}

}  // namespace cel
