// Copyright 2026 The enaet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ENAET_PLOT_HPP
#define ENAET_PLOT_HPP

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "enaet/image.hpp"

namespace enaet {

class MetricsParseError : public std::runtime_error {
 public:
  MetricsParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Curve {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (step, value)
};

struct Chart {
  std::string title;
  std::vector<Curve> curves;
};

struct MetricsCharts {
  Chart losses;
  Chart errors;
  std::size_t records = 0;
};

/// Loss terms, in legend order, that a step record may carry.
const std::vector<std::string>& loss_term_keys();

/// Reads a metrics JSONL stream; one curve per key present in any record.
MetricsCharts read_metrics_charts(const std::filesystem::path& path);

Image render_chart(const Chart& chart, int width = 640, int height = 400);

struct PlotFiles {
  std::filesystem::path losses;
  std::filesystem::path errors;
  bool empty = false;
};

/// Writes losses.png and errors.png into out_dir.
PlotFiles plot_metrics(const std::filesystem::path& metrics, const std::filesystem::path& out_dir);

}  // namespace enaet

#endif  // ENAET_PLOT_HPP
