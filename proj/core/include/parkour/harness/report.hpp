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

#pragma once

#include "parkour/harness/evaluate.hpp"

namespace parkour::harness {

// Comparison tables and plots across method runs: terrain completion by
// obstacle dimension, and constraint-violation percentages on successful
// traversals. Plots are self-contained SVG files with CSV twins; the
// generator consumes evaluation CSVs only.
struct MethodRun {
  std::string name;
  EvalResult result;
};

void emit_report(const std::vector<MethodRun>& runs,
                 const std::string& out_dir);

// minimal polyline chart
struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series,
                     double y_min = 0.0, double y_max = 1.0);

}  // namespace parkour::harness
