#pragma once

// Experiment configuration file: JSON with unit-suffixed keys.
//
//   {
//     "model": {"links": [{"mass_kg", "length_m", "com_m", "inertia_kgm2"}, ...],
//               "gravity_mps2",
//               "friction": {"viscous_nms_per_rad": [...], "coulomb_nm": [...]}},
//     "sim": {"dt_s", "duration_s", "v_eps_rad_per_s", "integrator"},
//     "initial_state": {"q_rad": [...], "qd_rad_per_s": [...], "jitter_rad"},
//     "estimation": {"alpha_per_s", "tau_d_s", "sigma_e"},
//     "controllers": {"fel": {...}, "cel": {...}},
//     "tasks": [{"duration_s", "steps": [{"at_s", "q_c_rad": [...]}]}],
//     "output_dir", "seed"
//   }
//
// Controller blocks take lambda1_per_s, lambda2_nms_per_rad, gamma, kappa,
// sigma0 and an optional c_w (default 1.5 ||W|| of the model). Every section
// except "model" and "tasks" may be omitted; unknown keys are rejected.

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "cel/control.hpp"
#include "cel/dynamics.hpp"
#include "cel/estimation.hpp"
#include "cel/simulate.hpp"

namespace cel {

struct ExperimentConfig {
  std::vector<LinkParams> links;
  double gravity_mps2 = 9.81;
  FrictionParams friction;
  SimConfig sim;
  JointVector q0;
  JointVector qd0;
  /// Half-width of the uniform perturbation of q0 drawn from `seed`.
  double jitter_rad = 0.0;
  EstimationConfig estimation;
  ControllerConfig fel;
  ControllerConfig cel;
  std::vector<Task> tasks;
  std::string output_dir = "out";
  std::optional<std::uint64_t> seed;

  ManipulatorModel model() const;
  /// q0 after seeded jitter; both controllers start here.
  JointVector initial_q() const;
  CommandSchedule schedule() const;
  ClosedLoopSetup setup(LearningMode mode) const;
};

/// Throws ConfigError("<field path>: <reason>").
ExperimentConfig parse_config(const nlohmann::json& doc);
/// Throws IoError if the file cannot be read, ConfigError on bad content.
ExperimentConfig load_config(const std::string& path);

/// The shipped 2-link scenario: five 50 s tasks, each opening with steps
/// through the four corners (+-1, +-1) rad one second apart and then
/// holding (0, 0).
ExperimentConfig default_config();

nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace cel
