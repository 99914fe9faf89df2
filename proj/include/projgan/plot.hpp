#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace projgan {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool reverse_x = false;  // draw x decreasing left to right
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<double> values;
};

void write_line_chart(const LineChart& chart, const std::filesystem::path& png, int width = 640, int height = 420);
void write_bar_chart(const BarChart& chart, const std::filesystem::path& png, int width = 640, int height = 420);

}  // namespace projgan
