// Copyright 2026 The fisher-cpp Authors. All Rights Reserved.
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

#ifndef FISHER_SVG_HPP_
#define FISHER_SVG_HPP_

#include <string>
#include <vector>

namespace fisher {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log_x = false;  // base-10 x axis, x must be positive
  int width = 640;
  int height = 400;
};

/// Standalone SVG document: axes with ticks, one polyline plus markers per
/// series, legend. Output is a pure function of the chart. Throws UsageError
/// on empty charts, mismatched x / y, non-finite values, or x <= 0 on a log
/// axis.
std::string render_svg(const LineChart& chart);

/// Escapes & < > " for XML text and attributes.
std::string xml_escape(const std::string& text);

}  // namespace fisher

#endif  // FISHER_SVG_HPP_
