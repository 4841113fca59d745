#include "cel/experiment.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <map>

#include "cel/errors.hpp"
#include "cel/simulate.hpp"

namespace cel {

std::vector<const ExperimentLog*> ExperimentRuns::logs() const {
  std::vector<const ExperimentLog*> out;
  if (fel) out.push_back(&*fel);
  if (cel) out.push_back(&*cel);
  return out;
}

ExperimentRuns run_experiment(const ExperimentConfig& config, RunSelection which) {
  const ManipulatorModel model = config.model();
  auto run = [&](LearningMode mode) {
    return run_closed_loop(model, config.setup(mode), config.sim);
  };

  ExperimentRuns out;
  if (which.fel && which.cel && which.parallel) {
    auto fel = std::async(std::launch::async, run, LearningMode::kFel);
    auto cel = std::async(std::launch::async, run, LearningMode::kCel);
    // Collect both before rethrowing so neither thread outlives the call.
    std::exception_ptr failure;
    try {
      out.fel = fel.get();
    } catch (...) {
      failure = std::current_exception();
    }
    try {
      out.cel = cel.get();
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    if (which.fel) out.fel = run(LearningMode::kFel);
    if (which.cel) out.cel = run(LearningMode::kCel);
  }

  if (out.fel && out.cel &&
      hash_desired_trajectory(*out.fel) != hash_desired_trajectory(*out.cel)) {
    throw InternalError("fel and cel runs saw different reference trajectories");
  }
  return out;
}

std::vector<TaskSummary> summarize(const ExperimentLog& log) {
  if (log.rows() == 0) throw InvalidInput("cannot summarize an empty log");
  const int n = log.dof;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::map<int, TaskSummary> by_task;
  for (std::size_t r = 0; r < log.rows(); ++r) {
    const int task = log.task[r];
    if (task < 0) continue;
    auto [it, inserted] = by_task.try_emplace(task);
    TaskSummary& s = it->second;
    if (inserted) {
      s.controller = log.controller;
      s.task = task;
      s.t_start_s = log.t[r];
      s.e1.assign(n, JointRange{kInf, -kInf});
      s.tau.assign(n, JointRange{kInf, -kInf});
    }
    s.t_end_s = log.t[r];
    for (int j = 0; j < n; ++j) {
      const double e = log.at(log.e1, r, j);
      const double u = log.at(log.tau, r, j);
      s.e1[j].min = std::min(s.e1[j].min, e);
      s.e1[j].max = std::max(s.e1[j].max, e);
      s.tau[j].min = std::min(s.tau[j].min, u);
      s.tau[j].max = std::max(s.tau[j].max, u);
    }
  }

  std::vector<TaskSummary> out;
  for (auto& [task, s] : by_task) out.push_back(std::move(s));
  for (TaskSummary& s : out) {
    s.e1_width_ratio.resize(n);
    for (int j = 0; j < n; ++j) {
      const double first = out.front().e1[j].width();
      s.e1_width_ratio[j] = first > 0.0 ? s.e1[j].width() / first
                                        : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

}  // namespace cel
