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

#include "enaet/plot.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "enaet/png_io.hpp"
#include "enaet/transforms.hpp"

namespace enaet {

namespace {

// 3x5 glyphs, rows top to bottom.
struct Glyph {
  char c;
  const char* bits;
};

constexpr Glyph kFont[] = {
    {'a', "010101111101101"}, {'b', "110101110101110"}, {'c', "011100100100011"},
    {'d', "110101101101110"}, {'e', "111100110100111"}, {'f', "111100110100100"},
    {'g', "011100101101011"}, {'h', "101101111101101"}, {'i', "111010010010111"},
    {'j', "001001001101010"}, {'k', "101101110101101"}, {'l', "100100100100111"},
    {'m', "101111111101101"}, {'n', "110101101101101"}, {'o', "010101101101010"},
    {'p', "110101110100100"}, {'q', "010101101110011"}, {'r', "110101110101101"},
    {'s', "011100010001110"}, {'t', "111010010010010"}, {'u', "101101101101111"},
    {'v', "101101101101010"}, {'w', "101101111111101"}, {'x', "101101010101101"},
    {'y', "101101010010010"}, {'z', "111001010100111"}, {'0', "111101101101111"},
    {'1', "010110010010111"}, {'2', "110001010100111"}, {'3', "110001010001110"},
    {'4', "101101111001001"}, {'5', "111100110001110"}, {'6', "011100111101111"},
    {'7', "111001010010010"}, {'8', "111101111101111"}, {'9', "111101111001110"},
    {'_', "000000000000111"}, {'.', "000000000000010"}, {'-', "000000111000000"},
    {'+', "000010111010000"},
};

const char* glyph_bits(char c) {
  if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  for (const Glyph& g : kFont)
    if (g.c == c) return g.bits;
  return nullptr;
}

using Rgb = std::array<double, 3>;

constexpr Rgb kPalette[] = {
    {0.12, 0.47, 0.71}, {1.00, 0.50, 0.05}, {0.17, 0.63, 0.17}, {0.84, 0.15, 0.16},
    {0.58, 0.40, 0.74}, {0.55, 0.34, 0.29}, {0.89, 0.47, 0.76}, {0.50, 0.50, 0.50},
    {0.74, 0.74, 0.13}, {0.09, 0.75, 0.81}, {0.00, 0.00, 0.55}, {0.60, 0.00, 0.00},
    {0.00, 0.00, 0.00},
};

class Canvas {
 public:
  Canvas(int w, int h) : img_(h, w, 3) { std::fill(img_.pixels.begin(), img_.pixels.end(), 1.0); }

  void set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    for (int ch = 0; ch < 3; ++ch) img_.at(y, x, ch) = c[ch];
  }

  void line(int x0, int y0, int x1, int y1, const Rgb& c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void rect(int x0, int y0, int x1, int y1, const Rgb& c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, c);
  }

  /// Returns the x just past the text.
  int text(int x, int y, const std::string& s, const Rgb& c, int scale = 2) {
    for (char ch : s) {
      if (const char* bits = glyph_bits(ch)) {
        for (int r = 0; r < 5; ++r)
          for (int col = 0; col < 3; ++col)
            if (bits[r * 3 + col] == '1')
              rect(x + col * scale, y + r * scale, x + col * scale + scale - 1,
                   y + r * scale + scale - 1, c);
      }
      x += 4 * scale;
    }
    return x;
  }

  Image take() { return std::move(img_); }

 private:
  Image img_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void add_point(std::vector<Curve>& curves, const std::string& name, double step, double value) {
  auto it = std::find_if(curves.begin(), curves.end(), [&](const Curve& c) { return c.name == name; });
  if (it == curves.end()) {
    curves.push_back({name, {}});
    it = curves.end() - 1;
  }
  it->points.emplace_back(step, value);
}

void order_like(std::vector<Curve>& curves, const std::vector<std::string>& order) {
  std::stable_sort(curves.begin(), curves.end(), [&](const Curve& a, const Curve& b) {
    return std::find(order.begin(), order.end(), a.name) <
           std::find(order.begin(), order.end(), b.name);
  });
}

}  // namespace

const std::vector<std::string>& loss_term_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"l_labeled", "l_unlabeled"};
    for (Family f : kAllFamilies) k.push_back("l_aet_" + std::string(family_name(f)));
    for (Family f : kAllFamilies) k.push_back("l_cl_" + std::string(family_name(f)));
    k.push_back("total");
    return k;
  }();
  return keys;
}

MetricsCharts read_metrics_charts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics file " + path.string());
  MetricsCharts out;
  out.losses.title = "losses";
  out.errors.title = "test error";
  const std::vector<std::string> error_keys{"student_error", "teacher_error", "teacher_error_last_k"};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MetricsParseError(line_no, "malformed JSON record");
    }
    if (!j.is_object()) throw MetricsParseError(line_no, "record is not a JSON object");
    if (!j.contains("step") || !j["step"].is_number())
      throw MetricsParseError(line_no, "record has no numeric 'step'");
    const double step = j["step"].get<double>();
    for (const auto& key : loss_term_keys())
      if (j.contains(key) && j[key].is_number())
        add_point(out.losses.curves, key, step, j[key].get<double>());
    for (const auto& key : error_keys)
      if (j.contains(key) && j[key].is_number())
        add_point(out.errors.curves, key, step, j[key].get<double>());
    ++out.records;
  }
  order_like(out.losses.curves, loss_term_keys());
  order_like(out.errors.curves, error_keys);
  return out;
}

Image render_chart(const Chart& chart, int width, int height) {
  constexpr int kLegendWidth = 170;
  constexpr int kLeft = 60, kTop = 30, kBottom = 40, kRight = 15;
  Canvas cv(width + kLegendWidth, height);
  const Rgb black{0, 0, 0}, grid{0.85, 0.85, 0.85};
  const int x0 = kLeft, x1 = width - kRight, y0 = height - kBottom, y1 = kTop;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = 0.0, ymax = -std::numeric_limits<double>::infinity();
  for (const auto& c : chart.curves)
    for (const auto& [x, y] : c.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
  }
  if (!std::isfinite(ymax)) ymax = 1.0;
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;

  for (int i = 1; i < 5; ++i) {
    const int gy = y0 + (y1 - y0) * i / 5;
    cv.line(x0, gy, x1, gy, grid);
  }
  cv.line(x0, y0, x1, y0, black);
  cv.line(x0, y0, x0, y1, black);
  cv.text(x0, 8, chart.title, black);
  cv.text(4, y1, fmt(ymax), black);
  cv.text(4, y0 - 10, fmt(ymin), black);
  cv.text(x0, y0 + 8, fmt(xmin), black);
  const std::string xm = fmt(xmax);
  cv.text(x1 - static_cast<int>(xm.size()) * 8, y0 + 8, xm, black);
  cv.text((x0 + x1) / 2 - 16, y0 + 24, "step", black);

  const auto px = [&](double x) {
    return x0 + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (x1 - x0)));
  };
  const auto py = [&](double y) {
    return y0 + static_cast<int>(std::lround((y - ymin) / (ymax - ymin) * (y1 - y0)));
  };
  constexpr std::size_t kColors = sizeof kPalette / sizeof kPalette[0];
  for (std::size_t i = 0; i < chart.curves.size(); ++i) {
    const Rgb& color = kPalette[i % kColors];
    const auto& pts = chart.curves[i].points;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      if (!std::isfinite(pts[p].second)) continue;
      if (p == 0 || !std::isfinite(pts[p - 1].second))
        cv.set(px(pts[p].first), py(pts[p].second), color);
      else
        cv.line(px(pts[p - 1].first), py(pts[p - 1].second), px(pts[p].first),
                py(pts[p].second), color);
    }
    const int ly = kTop + static_cast<int>(i) * 16;
    cv.rect(width + 5, ly + 2, width + 17, ly + 8, color);
    cv.text(width + 24, ly, chart.curves[i].name, black);
  }
  return cv.take();
}

PlotFiles plot_metrics(const std::filesystem::path& metrics, const std::filesystem::path& out_dir) {
  const MetricsCharts charts = read_metrics_charts(metrics);
  std::filesystem::create_directories(out_dir);
  PlotFiles files{out_dir / "losses.png", out_dir / "errors.png", charts.records == 0};
  write_png(files.losses, render_chart(charts.losses));
  write_png(files.errors, render_chart(charts.errors));
  return files;
}

}  // namespace enaet
