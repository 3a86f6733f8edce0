/*
 * Copyright 2026 The D3 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>
#include <vector>

namespace d3::cli {

struct Series {
  std::string name;
  std::vector<double> y;  // NaN marks a missing point
  std::string color;
};

/// Standalone SVG line chart with axes, ticks and a legend.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::vector<double>& x, const std::vector<Series>& series);

}  // namespace d3::cli
