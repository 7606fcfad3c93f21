/*
Copyright 2026 the parkourlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS-IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "parkour/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace parkour::harness {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '&')
      out += "&amp;";
    else
      out += c;
  }
  return out;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, double y_min,
                     double y_max) {
  double x_min = 1e300, x_max = -1e300;
  for (const auto& s : series)
    for (double x : s.x) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
    }
  if (!(x_min < x_max)) {
    x_min = 0.0;
    x_max = 1.0;
  }
  for (const auto& s : series)
    for (double y : s.y) y_max = std::max(y_max, y);

  const double W = 640, H = 420;
  const double L = 70, R = 180, T = 44, B = 52;  // margins, right holds legend
  auto px = [&](double x) {
    return L + (x - x_min) / (x_max - x_min) * (W - L - R);
  };
  auto py = [&](double y) {
    return H - B - (y - y_min) / (y_max - y_min) * (H - T - B);
  };

  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
      << H << "' viewBox='0 0 " << W << " " << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
      << "font-family='sans-serif' font-size='15'>" << esc(title)
      << "</text>\n";

  // axes and ticks
  out << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='"
      << H - B << "' stroke='black'/>\n";
  out << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R
      << "' y2='" << H - B << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_min + (x_max - x_min) * i / 5;
    const double yv = y_min + (y_max - y_min) * i / 5;
    char xb[32], yb[32];
    std::snprintf(xb, sizeof xb, "%.3g", xv);
    std::snprintf(yb, sizeof yb, "%.3g", yv);
    out << "<line x1='" << px(xv) << "' y1='" << H - B << "' x2='" << px(xv)
        << "' y2='" << H - B + 5 << "' stroke='black'/>\n";
    out << "<text x='" << px(xv) << "' y='" << H - B + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
        << xb << "</text>\n";
    out << "<line x1='" << L - 5 << "' y1='" << py(yv) << "' x2='" << L
        << "' y2='" << py(yv) << "' stroke='black'/>\n";
    out << "<text x='" << L - 9 << "' y='" << py(yv) + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>" << yb
        << "</text>\n";
    out << "<line x1='" << L << "' y1='" << py(yv) << "' x2='" << W - R
        << "' y2='" << py(yv) << "' stroke='#dddddd' stroke-width='0.5'/>\n";
  }
  out << "<text x='" << (L + W - R) / 2 << "' y='" << H - 14
      << "' text-anchor='middle' font-family='sans-serif' font-size='12'>"
      << esc(x_label) << "</text>\n";
  out << "<text x='18' y='" << (T + H - B) / 2
      << "' text-anchor='middle' font-family='sans-serif' font-size='12' "
      << "transform='rotate(-90 18 " << (T + H - B) / 2 << ")'>" << esc(y_label)
      << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % 8];
    out << "<polyline fill='none' stroke='" << color
        << "' stroke-width='2' points='";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << px(s.x[i]) << "," << py(std::clamp(s.y[i], y_min, y_max)) << " ";
    out << "'/>\n";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << "<circle cx='" << px(s.x[i]) << "' cy='"
          << py(std::clamp(s.y[i], y_min, y_max)) << "' r='3' fill='" << color
          << "'/>\n";
    const double ly = T + 16 + 18 * static_cast<double>(si);
    out << "<line x1='" << W - R + 12 << "' y1='" << ly << "' x2='"
        << W - R + 34 << "' y2='" << ly << "' stroke='" << color
        << "' stroke-width='2'/>\n";
    out << "<text x='" << W - R + 40 << "' y='" << ly + 4
        << "' font-family='sans-serif' font-size='12'>" << esc(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_report(const std::vector<MethodRun>& runs,
                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  // flat tables
  {
    std::ofstream out(out_dir + "/completion_by_dimension.csv");
    out << "method,kind,level,obstacle_dimension,completion,success_rate\n";
    for (const auto& run : runs)
      for (const auto& c : run.result.cells)
        out << run.name << ',' << sim::to_string(c.kind) << ',' << c.level
            << ',' << c.obstacle_dimension << ',' << c.completion << ','
            << c.success_rate << "\n";
  }
  {
    std::ofstream out(out_dir + "/violations_by_dimension.csv");
    out << "method,kind,level,obstacle_dimension";
    for (const auto& spec : task::constraint_specs()) out << ",viol_" << spec.id;
    out << "\n";
    for (const auto& run : runs)
      for (const auto& c : run.result.cells) {
        out << run.name << ',' << sim::to_string(c.kind) << ',' << c.level
            << ',' << c.obstacle_dimension;
        for (int i = 0; i < c.violation_pct.size(); ++i)
          out << ',' << c.violation_pct[i];
        out << "\n";
      }
  }

  // per-kind plots: completion, torque violation, orientation violation
  std::vector<sim::TerrainKind> kinds;
  for (const auto& run : runs)
    for (const auto& c : run.result.cells)
      if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end() &&
          c.kind != sim::TerrainKind::flat)
        kinds.push_back(c.kind);

  for (const auto kind : kinds) {
    std::vector<SvgSeries> completion, torque, orientation;
    for (const auto& run : runs) {
      SvgSeries sc{run.name, {}, {}};
      SvgSeries st{run.name, {}, {}};
      SvgSeries so{run.name, {}, {}};
      for (const auto& c : run.result.cells) {
        if (c.kind != kind) continue;
        sc.x.push_back(c.obstacle_dimension);
        sc.y.push_back(c.completion);
        if (c.success_steps > 0) {
          double torque_max = 0.0;
          for (int j = 0; j < 4; ++j)
            torque_max =
                std::max(torque_max, c.violation_pct[task::kTorque0 + j]);
          st.x.push_back(c.obstacle_dimension);
          st.y.push_back(100.0 * torque_max);
          so.x.push_back(c.obstacle_dimension);
          so.y.push_back(100.0 * c.violation_pct[task::kOrientation]);
        }
      }
      if (!sc.x.empty()) completion.push_back(std::move(sc));
      if (!st.x.empty()) torque.push_back(std::move(st));
      if (!so.x.empty()) orientation.push_back(std::move(so));
    }
    const std::string k = sim::to_string(kind);
    if (!completion.empty())
      write_svg_chart(out_dir + "/completion_" + k + ".svg",
                      "terrain completion: " + k, "obstacle dimension (m)",
                      "completion", completion, 0.0, 1.0);
    if (!torque.empty())
      write_svg_chart(out_dir + "/violations_torque_" + k + ".svg",
                      "torque violations on successful runs: " + k,
                      "obstacle dimension (m)", "% of steps", torque, 0.0, 10.0);
    if (!orientation.empty())
      write_svg_chart(out_dir + "/violations_orientation_" + k + ".svg",
                      "orientation violations on successful runs: " + k,
                      "obstacle dimension (m)", "% of steps", orientation, 0.0,
                      20.0);
  }
}

}  // namespace parkour::harness
