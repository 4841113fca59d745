#include "cel/outputs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cel/errors.hpp"

namespace cel {
namespace {

struct JointColumn {
  const char* name;
  std::vector<double> ExperimentLog::*member;
};

struct ScalarColumn {
  const char* name;
  std::vector<double> ExperimentLog::*member;
};

const JointColumn kJointColumns[] = {
    {"q_rad", &ExperimentLog::q},           {"qd_rad_per_s", &ExperimentLog::qd},
    {"q_d_rad", &ExperimentLog::q_d},       {"e1_rad", &ExperimentLog::e1},
    {"e2_rad_per_s", &ExperimentLog::e2},   {"tau_nm", &ExperimentLog::tau},
    {"tau_fb_nm", &ExperimentLog::tau_fb},  {"tau_ff_nm", &ExperimentLog::tau_ff},
    {"tau_fc_nm", &ExperimentLog::tau_fc},
};

const ScalarColumn kScalarColumns[] = {
    {"w_hat_norm", &ExperimentLog::w_hat_norm},
    {"w_tilde_norm", &ExperimentLog::w_tilde_norm},
    {"lambda_min_theta", &ExperimentLog::lambda_min_theta},
    {"xi_norm", &ExperimentLog::xi_norm},
    {"friction_mismatch_nm", &ExperimentLog::friction_mismatch_norm},
    {"memory_residual", &ExperimentLog::memory_residual},
};

void put(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line_no) {
  T v{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw InvalidInput("line " + std::to_string(line_no) + ": cannot parse '" +
                       std::string(field) + "'");
  }
  return v;
}

void write_header(std::ostream& out, const std::vector<std::string>& header) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Keeps the min and max of each bucket so spikes survive the thinning.
PlotSeries decimate(const std::string& label, const std::vector<double>& x,
                    const std::vector<double>& y, std::size_t buckets = 1500) {
  PlotSeries s{label, {}, {}};
  const std::size_t n = x.size();
  if (n <= 2 * buckets) {
    s.x = x;
    s.y = y;
    return s;
  }
  const std::size_t per = (n + buckets - 1) / buckets;
  for (std::size_t b = 0; b < n; b += per) {
    const std::size_t e = std::min(n, b + per);
    std::size_t lo = b, hi = b;
    for (std::size_t i = b; i < e; ++i) {
      if (y[i] < y[lo]) lo = i;
      if (y[i] > y[hi]) hi = i;
    }
    for (std::size_t i : {std::min(lo, hi), std::max(lo, hi)}) {
      s.x.push_back(x[i]);
      s.y.push_back(y[i]);
    }
  }
  return s;
}

std::string tick_label(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << v;
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::vector<std::string> log_csv_header(int dof) {
  std::vector<std::string> h{"t_s", "task"};
  for (const JointColumn& c : kJointColumns) {
    for (int j = 1; j <= dof; ++j) h.push_back(std::string(c.name) + "_" + std::to_string(j));
  }
  for (const ScalarColumn& c : kScalarColumns) h.emplace_back(c.name);
  h.emplace_back("ie_frozen");
  return h;
}

void write_log_csv(std::ostream& out, const ExperimentLog& log) {
  write_header(out, log_csv_header(log.dof));
  for (std::size_t r = 0; r < log.rows(); ++r) {
    put(out, log.t[r]);
    out << ',' << log.task[r];
    for (const JointColumn& c : kJointColumns) {
      for (int j = 0; j < log.dof; ++j) {
        out << ',';
        put(out, log.at(log.*c.member, r, j));
      }
    }
    for (const ScalarColumn& c : kScalarColumns) {
      out << ',';
      put(out, (log.*c.member)[r]);
    }
    out << ',' << static_cast<int>(log.ie_frozen[r]) << '\n';
  }
}

ExperimentLog read_log_csv(std::istream& in, const std::string& controller) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("log CSV is empty");
  const std::vector<std::string_view> header = split(line);
  const std::size_t fixed = 2 + std::size(kScalarColumns) + 1;
  const std::size_t per_joint = std::size(kJointColumns);
  if (header.size() < fixed + per_joint || (header.size() - fixed) % per_joint != 0) {
    throw InvalidInput("log CSV header has an unexpected column count");
  }
  ExperimentLog log;
  log.controller = controller;
  log.dof = static_cast<int>((header.size() - fixed) / per_joint);
  const std::vector<std::string> expected = log_csv_header(log.dof);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (header[i] != expected[i]) {
      throw InvalidInput("log CSV column " + std::to_string(i + 1) + " is '" +
                         std::string(header[i]) + "', expected '" + expected[i] + "'");
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string_view> f = split(line);
    if (f.size() != expected.size()) {
      throw InvalidInput("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(expected.size()) + " fields");
    }
    std::size_t k = 0;
    log.t.push_back(parse_field<double>(f[k++], line_no));
    log.task.push_back(parse_field<int>(f[k++], line_no));
    for (const JointColumn& c : kJointColumns) {
      for (int j = 0; j < log.dof; ++j) {
        (log.*c.member).push_back(parse_field<double>(f[k++], line_no));
      }
    }
    for (const ScalarColumn& c : kScalarColumns) {
      (log.*c.member).push_back(parse_field<double>(f[k++], line_no));
    }
    log.ie_frozen.push_back(static_cast<std::uint8_t>(parse_field<int>(f[k++], line_no)));
  }
  return log;
}

ExperimentLog read_log_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open log '" + path + "'");
  try {
    return read_log_csv(in, std::filesystem::path(path).stem().string());
  } catch (const InvalidInput& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::vector<std::string> summary_csv_header(int dof) {
  std::vector<std::string> h{"controller", "task", "t_start_s", "t_end_s"};
  for (int j = 1; j <= dof; ++j) {
    const std::string s = "_" + std::to_string(j);
    for (const char* name : {"e1_min_rad", "e1_max_rad", "e1_width_rad", "e1_width_ratio",
                             "tau_min_nm", "tau_max_nm"}) {
      h.push_back(name + s);
    }
  }
  return h;
}

void write_summary_csv(std::ostream& out, int dof,
                       const std::vector<TaskSummary>& summaries) {
  write_header(out, summary_csv_header(dof));
  for (const TaskSummary& s : summaries) {
    out << s.controller << ',' << s.task << ',';
    put(out, s.t_start_s);
    out << ',';
    put(out, s.t_end_s);
    for (int j = 0; j < dof; ++j) {
      for (double v : {s.e1[j].min, s.e1[j].max, s.e1[j].width(), s.e1_width_ratio[j],
                       s.tau[j].min, s.tau[j].max}) {
        out << ',';
        put(out, v);
      }
    }
    out << '\n';
  }
}

std::string render_svg_plot(const std::string& title, const std::string& x_label,
                            const std::string& y_label,
                            const std::vector<PlotSeries>& series, bool log_y) {
  constexpr double kW = 800, kH = 450, kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  static const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};

  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_y && !(s.y[i] > 0.0))) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!(x1 > x0)) { x0 = 0; x1 = x1 > 0 ? x1 : 1; }
  if (!(y1 > y0)) { y0 = std::isfinite(y0) ? y0 - 0.5 : 0; y1 = y0 + 1; }
  if (!log_y && y0 > 0) y0 = 0;
  auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + ph - (ty(y) - y0) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = x0 + (x1 - x0) * i / 5.0;
    const double gx = kLeft + pw * i / 5.0;
    svg << "<line x1=\"" << gx << "\" y1=\"" << kTop + ph << "\" x2=\"" << gx << "\" y2=\""
        << kTop + ph + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << gx << "\" y=\"" << kTop + ph + 20 << "\" text-anchor=\"middle\">"
        << tick_label(fx) << "</text>\n";
    const double fy = y0 + (y1 - y0) * i / 5.0;
    const double gy = kTop + ph - ph * i / 5.0;
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << gy << "\" x2=\"" << kLeft
        << "\" y2=\"" << gy << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << kLeft - 8 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
        << tick_label(log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15
      << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n"
      << "<text transform=\"translate(20," << kTop + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kColors[k % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (log_y && !(s.y[i] > 0.0))) continue;
      svg << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    svg << "\"/>\n";
    const double ly = kTop + 15 + 20.0 * k;
    svg << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << ly << "\" x2=\""
        << kLeft + pw + 40 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kLeft + pw + 45 << "\" y=\"" << ly + 4 << "\">"
        << xml_escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::string> emit_outputs(const std::vector<const ExperimentLog*>& logs,
                                      const std::string& outdir) {
  namespace fs = std::filesystem;
  const fs::path dir(outdir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + outdir + "': " + ec.message());

  std::vector<std::string> written;
  const int dof = logs.empty() ? 0 : logs.front()->dof;
  std::vector<TaskSummary> summaries;
  std::vector<PlotSeries> err, what, lam;
  for (const ExperimentLog* log : logs) {
    std::ostringstream csv;
    write_log_csv(csv, *log);
    const fs::path path = dir / (log->controller + ".csv");
    write_file(path, csv.str());
    written.push_back(path.string());

    const auto s = summarize(*log);
    summaries.insert(summaries.end(), s.begin(), s.end());

    std::vector<double> e_norm(log->rows());
    for (std::size_t r = 0; r < log->rows(); ++r) e_norm[r] = log->row(log->e1, r).norm();
    err.push_back(decimate(log->controller, log->t, e_norm));
    what.push_back(decimate(log->controller + " |W_hat|", log->t, log->w_hat_norm));
    what.push_back(decimate(log->controller + " |W_tilde|", log->t, log->w_tilde_norm));
    lam.push_back(decimate(log->controller, log->t, log->lambda_min_theta));
  }

  std::ostringstream summary;
  write_summary_csv(summary, dof, summaries);
  const fs::path summary_path = dir / "summary.csv";
  write_file(summary_path, summary.str());
  written.push_back(summary_path.string());

  const std::pair<const char*, std::string> plots[] = {
      {"tracking_error.svg",
       render_svg_plot("Tracking error norm |e1|", "t [s]", "|e1| [rad]", err)},
      {"w_hat_norm.svg",
       render_svg_plot("Parameter estimate and error norms", "t [s]", "norm", what)},
      {"lambda_min_theta.svg",
       render_svg_plot("Smallest eigenvalue of the excitation matrix", "t [s]",
                       "lambda_min", lam)},
  };
  for (const auto& [name, content] : plots) {
    const fs::path path = dir / name;
    write_file(path, content);
    written.push_back(path.string());
  }
  return written;
}

}  // namespace cel
