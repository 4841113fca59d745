#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cel/config.hpp"
#include "cel/log.hpp"

namespace cel {

struct ExperimentRuns {
  std::optional<ExperimentLog> fel;
  std::optional<ExperimentLog> cel;

  std::vector<const ExperimentLog*> logs() const;
};

struct RunSelection {
  bool fel = true;
  bool cel = true;
  /// Run the two controllers on separate threads.
  bool parallel = true;
};

/// Runs the selected controllers on the same plant, schedule and initial
/// state. When both run, their q_d series are compared by hash and a
/// mismatch throws InternalError. Divergence propagates as DivergenceError
/// naming the controller.
ExperimentRuns run_experiment(const ExperimentConfig& config, RunSelection which = {});

struct JointRange {
  double min = 0.0;
  double max = 0.0;
  double width() const { return max - min; }
};

/// Extrema of one task, per joint.
struct TaskSummary {
  std::string controller;
  int task = 0;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  std::vector<JointRange> e1;
  std::vector<JointRange> tau;
  /// e1 range width divided by the first task's width (NaN for a zero
  /// first-task width).
  std::vector<double> e1_width_ratio;
};

/// One summary per task present in the log, in task order. Rows outside
/// any task (task index -1) are ignored. Throws InvalidInput on an empty log.
std::vector<TaskSummary> summarize(const ExperimentLog& log);

}  // namespace cel
