#pragma once

// File artifacts of an experiment: per-controller CSV logs, a task summary
// table and SVG line plots.
//
// Log CSV columns, joint-valued fields expanded as name_1 .. name_n:
//   t_s, task, q_rad_*, qd_rad_per_s_*, q_d_rad_*, e1_rad_*, e2_rad_per_s_*,
//   tau_nm_*, tau_fb_nm_*, tau_ff_nm_*, tau_fc_nm_*, w_hat_norm,
//   w_tilde_norm, lambda_min_theta, xi_norm, friction_mismatch_nm,
//   memory_residual, ie_frozen
// Doubles are written in shortest round-trip form, so reading a file back
// reproduces the log exactly.

#include <iosfwd>
#include <string>
#include <vector>

#include "cel/experiment.hpp"
#include "cel/log.hpp"

namespace cel {

std::vector<std::string> log_csv_header(int dof);
void write_log_csv(std::ostream& out, const ExperimentLog& log);
/// `controller` names the returned log; dof is taken from the header.
ExperimentLog read_log_csv(std::istream& in, const std::string& controller);
/// Throws IoError carrying the path.
ExperimentLog read_log_csv_file(const std::string& path);

/// Wide table, one row per (controller, task):
///   controller, task, t_start_s, t_end_s, then for each joint j
///   e1_min_rad_j, e1_max_rad_j, e1_width_rad_j, e1_width_ratio_j,
///   tau_min_nm_j, tau_max_nm_j
std::vector<std::string> summary_csv_header(int dof);
void write_summary_csv(std::ostream& out, int dof,
                       const std::vector<TaskSummary>& summaries);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Static SVG line chart with axes, tick labels and a legend.
std::string render_svg_plot(const std::string& title, const std::string& x_label,
                            const std::string& y_label,
                            const std::vector<PlotSeries>& series, bool log_y = false);

/// Writes <name>.csv per log, summary.csv, tracking_error.svg,
/// w_hat_norm.svg and lambda_min_theta.svg into `outdir` (created if needed).
/// Returns the written paths. Throws IoError naming the failing path.
std::vector<std::string> emit_outputs(const std::vector<const ExperimentLog*>& logs,
                                      const std::string& outdir);

}  // namespace cel
