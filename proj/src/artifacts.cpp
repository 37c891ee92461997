// Copyright 2026 The qpctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qpctl/artifacts.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace qpctl {

namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string pack_forces(const ForceRecords& records) {
  if (records.empty()) return "-";
  std::string out;
  for (size_t i = 0; i < records.size(); ++i) {
    if (i > 0) out += ';';
    out += std::to_string(records[i].body_point_index) + ':' +
           std::to_string(records[i].obstacle_index) + ':' +
           fmt_double(records[i].magnitude);
  }
  return out;
}

double peak(const ForceRecords& records) {
  double p = 0.0;
  for (const auto& r : records) p = std::max(p, r.magnitude);
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// --- tiny SVG line plots -------------------------------------------------

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
};

struct HLine {
  double y;
  std::string color;
  std::string label;
};

std::string render_svg(const std::string& title, const std::string& y_label,
                       const std::vector<Series>& series,
                       const std::vector<HLine>& hlines) {
  const double width = 860, height = 420;
  const double ml = 70, mr = 20, mt = 40, mb = 45;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        ymin = ymax = y;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  for (const auto& h : hlines) {
    ymin = std::min(ymin, h.y);
    ymax = std::max(ymax, h.y);
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const auto sx = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  const auto sy = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr
      << "\" height=\"" << height - mt - mb
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  // axis extents
  svg << "<text x=\"" << ml << "\" y=\"" << height - mb + 16
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << xmin << "</text>\n";
  svg << "<text x=\"" << width - mr << "\" y=\"" << height - mb + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << xmax << " s</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << sy(ymin)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << ymin << "</text>\n";
  svg << "<text x=\"" << ml - 6 << "\" y=\"" << sy(ymax) + 10
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << ymax << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << (mt + height - mb) / 2 << ")\" text-anchor=\"middle\">" << y_label
      << "</text>\n";

  for (const auto& h : hlines) {
    svg << "<line x1=\"" << ml << "\" y1=\"" << sy(h.y) << "\" x2=\"" << width - mr
        << "\" y2=\"" << sy(h.y) << "\" stroke=\"" << h.color
        << "\" stroke-dasharray=\"6,4\"/>\n";
    svg << "<text x=\"" << width - mr - 4 << "\" y=\"" << sy(h.y) - 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << h.color << "\">" << h.label << "</text>\n";
  }

  double legend_y = mt + 14;
  for (const auto& s : series) {
    if (s.points.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.4\" points=\"";
    for (const auto& [x, y] : s.points) svg << sx(x) << ',' << sy(y) << ' ';
    svg << "\"/>\n";
    svg << "<text x=\"" << ml + 10 << "\" y=\"" << legend_y
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << s.color
        << "\">" << s.label << "</text>\n";
    legend_y += 15;
  }
  svg << "</svg>\n";
  return svg.str();
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

}  // namespace

void ensure_writable_dir(const std::string& dir) {
  fs::create_directories(dir);
  const fs::path probe = fs::path(dir) / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory not writable: " + dir);
  }
  fs::remove(probe);
}

std::string run_csv(const RunResult& run) {
  const int n = run.scenario.model.num_joints();
  const bool joint_mode =
      run.scenario.reference.mode == TrackingObjective::Mode::joint_space;
  std::ostringstream out;
  out << "tick,time";
  for (int i = 0; i < n; ++i) out << ",q_" << i;
  for (int i = 0; i < n; ++i) out << ",q_cmd_" << i;
  if (joint_mode)
    for (int i = 0; i < n; ++i) out << ",q_ref_" << i;
  out << ",v_q,tracking_error,e_lambda,w,true_force_peak,est_force_peak,"
         "pred_force_peak,n_contacts_true,n_contacts_est,n_est_dropped,"
         "solver_status,solver_iterations,solver_kkt_residual,fault,"
         "sim_iterations,min_signed_distance,true_contacts,est_contacts,"
         "pred_contacts\n";
  for (const StepLog& log : run.logs) {
    out << log.tick << ',' << fmt_double(log.time);
    for (int i = 0; i < n; ++i) out << ',' << fmt_double(log.q[i]);
    for (int i = 0; i < n; ++i) out << ',' << fmt_double(log.q_cmd[i]);
    if (joint_mode)
      for (int i = 0; i < n; ++i) out << ',' << fmt_double(log.q_ref[i]);
    out << ',' << fmt_double(log.v_q) << ',' << fmt_double(log.tracking_error)
        << ',' << fmt_double(log.e_lambda) << ',' << fmt_double(log.w) << ','
        << fmt_double(peak(log.true_forces)) << ',' << fmt_double(peak(log.est_forces))
        << ',' << fmt_double(peak(log.pred_forces)) << ',' << log.true_forces.size()
        << ',' << log.est_forces.size() << ',' << log.est_dropped_rows << ','
        << to_string(log.solver_status) << ','
        << log.solver_iterations << ',' << fmt_double(log.solver_kkt_residual) << ','
        << (log.fault ? 1 : 0) << ',' << log.sim_iterations << ','
        << fmt_double(log.min_signed_distance) << ',' << pack_forces(log.true_forces)
        << ',' << pack_forces(log.est_forces) << ',' << pack_forces(log.pred_forces)
        << '\n';
  }
  return out.str();
}

std::string emit_artifacts(const RunResult& run, const std::string& output_dir) {
  ensure_writable_dir(output_dir);
  const Scenario& sc = run.scenario;
  const std::string prefix =
      sc.name + "_" + to_string(sc.controller.kind) + "_seed" + std::to_string(sc.rng_seed);
  const fs::path dir(output_dir);

  write_file(dir / (prefix + "_log.csv"), run_csv(run));

  Series force{"true contact force peak [N]", kPalette[0], {}};
  Series est_force{"estimated force peak [N]", kPalette[4], {}};
  Series vel{"||v_q|| [rad/s]", kPalette[1], {}};
  Series track{"tracking error", kPalette[2], {}};
  Series damp_w{"w", kPalette[3], {}};
  Series damp_e{"e_lambda", kPalette[5], {}};
  for (const StepLog& log : run.logs) {
    force.points.push_back({log.time, peak(log.true_forces)});
    est_force.points.push_back({log.time, peak(log.est_forces)});
    vel.points.push_back({log.time, log.v_q});
    track.points.push_back({log.time, log.tracking_error});
    damp_w.points.push_back({log.time, log.w});
    damp_e.points.push_back({log.time, log.e_lambda});
  }
  const std::vector<HLine> thresholds = {
      {sc.sensing.f_threshold, "#cc0000", "f_threshold"},
      {sc.controller.lambda_max, "#008800", "lambda_max"}};
  write_file(dir / (prefix + "_force.svg"),
             render_svg(prefix + ": contact force", "force [N]",
                        {force, est_force}, thresholds));
  write_file(dir / (prefix + "_velocity.svg"),
             render_svg(prefix + ": joint velocity norm", "[rad/s]", {vel}, {}));
  write_file(dir / (prefix + "_tracking.svg"),
             render_svg(prefix + ": tracking error", "error", {track}, {}));
  write_file(dir / (prefix + "_damping.svg"),
             render_svg(prefix + ": damping signals", "value", {damp_w, damp_e}, {}));

  std::ostringstream manifest;
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016" PRIx64, config_hash(sc));
  manifest << "qpctl_version: 0.1.0\n"
           << "scenario: " << sc.name << "\n"
           << "controller: " << to_string(sc.controller.kind) << "\n"
           << "seed: " << sc.rng_seed << "\n"
           << "config_hash: " << hash_buf << "\n"
           << "ticks: " << run.logs.size() << "\n"
           << "faults: " << run.fault_count << "\n"
           << "aborted: " << (run.aborted ? "yes" : "no") << "\n";
  if (run.aborted) manifest << "abort_reason: " << run.abort_reason << "\n";
  write_file(dir / (prefix + "_manifest.txt"), manifest.str());
  return prefix;
}

void emit_comparison(const ComparisonReport& report, const std::string& output_dir) {
  ensure_writable_dir(output_dir);
  const fs::path dir(output_dir);

  std::ostringstream csv;
  csv << "controller,repeat,seed,peak_true_force,mean_true_force_in_contact,"
         "tracking_rmse,peak_vq_in_window,contact_toggles_per_second,faults,"
         "aborted\n";
  for (const auto& entry : report.entries) {
    for (size_t r = 0; r < entry.runs.size(); ++r) {
      const RunMetrics& m = entry.metrics[r];
      csv << to_string(entry.kind) << ',' << r << ','
          << entry.runs[r].scenario.rng_seed << ',' << fmt_double(m.peak_true_force)
          << ',' << fmt_double(m.mean_true_force_in_contact) << ','
          << fmt_double(m.tracking_rmse) << ',' << fmt_double(m.peak_vq_in_window)
          << ',' << fmt_double(m.contact_toggles_per_second) << ',' << m.fault_count
          << ',' << (m.aborted ? 1 : 0) << '\n';
    }
    // min/mean/max envelope rows over repeats
    const auto agg = [&](auto pick, const char* tag) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
      for (const RunMetrics& m : entry.metrics) {
        const double v = pick(m);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      csv << to_string(entry.kind) << ',' << tag << ",," << fmt_double(lo) << "/"
          << fmt_double(sum / entry.metrics.size()) << "/" << fmt_double(hi)
          << ",,,,,,\n";
    };
    agg([](const RunMetrics& m) { return m.peak_true_force; }, "peak_force_min/mean/max");
    agg([](const RunMetrics& m) { return m.peak_vq_in_window; }, "peak_vq_min/mean/max");
    agg([](const RunMetrics& m) { return m.tracking_rmse; }, "rmse_min/mean/max");
  }
  write_file(dir / "compare_metrics.csv", csv.str());

  // Mean plus min/max envelope of per-tick traces across repeats.
  const auto envelope_series = [&](const ComparisonEntry& entry, bool force_trace,
                                   const std::string& color) {
    size_t ticks = SIZE_MAX;
    for (const RunResult& run : entry.runs) ticks = std::min(ticks, run.logs.size());
    Series mean{std::string(to_string(entry.kind)) + " (mean)", color, {}};
    Series lo{"", color, {}}, hi{"", color, {}};
    for (size_t t = 0; t < ticks; ++t) {
      double mn = std::numeric_limits<double>::infinity(), mx = 0.0, sum = 0.0;
      for (const RunResult& run : entry.runs) {
        const StepLog& log = run.logs[t];
        const double v = force_trace ? peak(log.true_forces) : log.v_q;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        sum += v;
      }
      const double time = entry.runs.front().logs[t].time;
      mean.points.push_back({time, sum / entry.runs.size()});
      lo.points.push_back({time, mn});
      hi.points.push_back({time, mx});
    }
    return std::vector<Series>{hi, lo, mean};
  };

  std::vector<Series> force_series, vel_series;
  int color_idx = 0;
  for (const auto& entry : report.entries) {
    const std::string color = kPalette[color_idx++ % 6];
    for (auto& s : envelope_series(entry, true, color)) force_series.push_back(s);
    for (auto& s : envelope_series(entry, false, color)) vel_series.push_back(s);
  }
  const std::vector<HLine> thresholds = {
      {report.scenario.sensing.f_threshold, "#cc0000", "f_threshold"},
      {report.scenario.controller.lambda_max, "#008800", "lambda_max"}};
  write_file(dir / "compare_force.svg",
             render_svg(report.scenario.name + ": contact force (envelopes over repeats)",
                        "force [N]", force_series, thresholds));
  write_file(dir / "compare_velocity.svg",
             render_svg(report.scenario.name + ": joint velocity norm (envelopes)",
                        "[rad/s]", vel_series, {}));
}

CsvSummary summarize_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("summarize_csv: empty input");
  std::vector<std::string> columns;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) columns.push_back(col);
  }
  const auto col_index = [&](const std::string& name) {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw std::runtime_error("summarize_csv: missing column " + name);
  };
  const int c_time = col_index("time");
  const int c_track = col_index("tracking_error");
  const int c_peak = col_index("true_force_peak");
  const int c_true = col_index("true_contacts");

  CsvSummary s;
  double err2 = 0.0;
  double last_time = 0.0;
  long toggles = 0;
  std::set<std::string> prev_ids;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    ++s.rows;
    last_time = std::stod(fields[c_time]);
    s.peak_true_force = std::max(s.peak_true_force, std::stod(fields[c_peak]));
    const double te = std::stod(fields[c_track]);
    err2 += te * te;
    std::set<std::string> ids;
    if (fields[c_true] != "-") {
      std::istringstream cs(fields[c_true]);
      std::string item;
      while (std::getline(cs, item, ';')) {
        const size_t second = item.rfind(':');
        ids.insert(item.substr(0, second));
      }
    }
    for (const auto& id : ids)
      if (!prev_ids.count(id)) ++toggles;
    for (const auto& id : prev_ids)
      if (!ids.count(id)) ++toggles;
    prev_ids = std::move(ids);
  }
  if (s.rows > 0) s.tracking_rmse = std::sqrt(err2 / static_cast<double>(s.rows));
  s.contact_toggles_per_second = last_time > 0.0 ? toggles / last_time : 0.0;
  return s;
}

}  // namespace qpctl
