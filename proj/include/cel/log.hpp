#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cel/dynamics.hpp"

namespace cel {

/// Per-step record of a closed-loop run, stored column-wise. Joint-valued
/// columns are flattened with stride `dof`.
struct ExperimentLog {
  std::string controller;
  int dof = 0;

  std::vector<double> t;
  std::vector<int> task;
  std::vector<double> q;
  std::vector<double> qd;
  std::vector<double> q_d;
  std::vector<double> e1;
  std::vector<double> e2;
  std::vector<double> tau;
  std::vector<double> tau_fb;
  std::vector<double> tau_ff;
  std::vector<double> tau_fc;
  std::vector<double> w_hat_norm;
  std::vector<double> w_tilde_norm;
  std::vector<double> lambda_min_theta;
  std::vector<double> xi_norm;
  /// ||Phi_f(qd)^T W_f - Phi_f(qr')^T W_hat_f||, plant friction model versus
  /// its compensation.
  std::vector<double> friction_mismatch_norm;
  /// ||Theta W - b|| / ||b|| of the live memory (0 while b = 0).
  std::vector<double> memory_residual;
  std::vector<std::uint8_t> ie_frozen;

  std::size_t rows() const { return t.size(); }

  /// Value of joint j in a flattened column at row r.
  double at(const std::vector<double>& column, std::size_t r, int j) const {
    return column[r * static_cast<std::size_t>(dof) + static_cast<std::size_t>(j)];
  }
  JointVector row(const std::vector<double>& column, std::size_t r) const;

  /// Time of the first frozen row, if any.
  std::optional<double> freeze_time() const;

  bool operator==(const ExperimentLog&) const = default;
};

/// FNV-1a over the bytes of the q_d column; equal for runs that saw the same
/// reference trajectory.
std::uint64_t hash_desired_trajectory(const ExperimentLog& log);

}  // namespace cel
