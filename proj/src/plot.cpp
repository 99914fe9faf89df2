#include "projgan/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "projgan/error.hpp"
#include "projgan/volume_io.hpp"

namespace projgan {
namespace {

constexpr int kGlyphW = 6;
constexpr int kGlyphH = 11;
constexpr uint8_t kFont[][kGlyphH] = {
#include "font6x11.inc"
};

using Rgb = std::array<uint8_t, 3>;
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrid{220, 220, 220};
constexpr Rgb kPalette[] = {{31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {148, 103, 189},
                            {255, 127, 14}, {140, 86, 75}, {23, 190, 207}, {127, 127, 127}};

class Canvas {
 public:
  Canvas(int w, int h) : img_{h, w, std::vector<uint8_t>(static_cast<size_t>(w) * h * 3, 255)} {}

  int width() const { return static_cast<int>(img_.cols); }
  int height() const { return static_cast<int>(img_.rows); }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width() || y >= height()) return;
    const size_t i = (static_cast<size_t>(y) * img_.cols + x) * 3;
    std::copy(c.begin(), c.end(), img_.pixels.begin() + static_cast<std::ptrdiff_t>(i));
  }

  void line(double x0, double y0, double x1, double y1, Rgb c, int thick = 1) {
    const int steps = static_cast<int>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      for (int dx = -(thick / 2); dx <= thick / 2; ++dx)
        for (int dy = -(thick / 2); dy <= thick / 2; ++dy) set(x + dx, y + dy, c);
    }
  }

  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }

  void text(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const int code = (ch < 32 || ch > 126) ? '?' : ch;
      const uint8_t* g = kFont[code - 32];
      for (int r = 0; r < kGlyphH; ++r)
        for (int col = 0; col < kGlyphW; ++col)
          if (g[r] & (1 << (kGlyphW - 1 - col))) set(x + col, y + r, c);
      x += kGlyphW;
    }
  }

  // Rotated 90 degrees counter-clockwise, reading bottom to top.
  void vtext(int x, int y, const std::string& s, Rgb c) {
    for (char ch : s) {
      const int code = (ch < 32 || ch > 126) ? '?' : ch;
      const uint8_t* g = kFont[code - 32];
      for (int r = 0; r < kGlyphH; ++r)
        for (int col = 0; col < kGlyphW; ++col)
          if (g[r] & (1 << (kGlyphW - 1 - col))) set(x + r, y - col, c);
      y -= kGlyphW;
    }
  }

  const RgbImage& image() const { return img_; }

 private:
  RgbImage img_;
};

int text_width(const std::string& s) { return static_cast<int>(s.size()) * kGlyphW; }

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo, hi;
};

Range padded(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    const double pad = std::max(std::abs(lo) * 0.05, 1e-3);
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

struct Frame {
  int left = 70, right = 20, top = 32, bottom = 50;
};

void draw_axes(Canvas& cv, const Frame& f, const std::string& title, const std::string& x_label,
               const std::string& y_label, Range yr) {
  const int x0 = f.left, x1 = cv.width() - f.right, y0 = cv.height() - f.bottom, y1 = f.top;
  for (int k = 0; k <= 5; ++k) {
    const double v = yr.lo + (yr.hi - yr.lo) * k / 5.0;
    const int y = static_cast<int>(std::lround(y0 - (y0 - y1) * k / 5.0));
    cv.line(x0, y, x1, y, kGrid);
    const std::string lab = tick_label(v);
    cv.text(x0 - 4 - text_width(lab), y - kGlyphH / 2, lab, kBlack);
  }
  cv.line(x0, y0, x1, y0, kBlack);
  cv.line(x0, y0, x0, y1, kBlack);
  cv.text((cv.width() - text_width(title)) / 2, 10, title, kBlack);
  cv.text((x0 + x1 - text_width(x_label)) / 2, cv.height() - 16, x_label, kBlack);
  cv.vtext(8, (y0 + y1 + text_width(y_label)) / 2, y_label, kBlack);
}

}  // namespace

void write_line_chart(const LineChart& chart, const std::filesystem::path& png, int width, int height) {
  if (chart.series.empty()) throw Error(ErrorKind::EmptySet, "line chart has no series");
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorKind::Shape, "series '" + s.label + "' has mismatched x/y");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  const Range xr = padded(xlo, xhi);
  const Range yr = padded(ylo, yhi);
  Canvas cv(width, height);
  Frame f;
  draw_axes(cv, f, chart.title, chart.x_label, chart.y_label, yr);
  const int x0 = f.left, x1 = width - f.right, y0 = height - f.bottom, y1 = f.top;
  auto px = [&](double x) {
    double t = (x - xr.lo) / (xr.hi - xr.lo);
    if (chart.reverse_x) t = 1.0 - t;
    return x0 + t * (x1 - x0);
  };
  auto py = [&](double y) { return y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1); };
  for (int k = 0; k <= 5; ++k) {
    const double v = xr.lo + (xr.hi - xr.lo) * k / 5.0;
    const std::string lab = tick_label(v);
    const int x = static_cast<int>(std::lround(px(v)));
    cv.line(x, y0, x, y0 + 4, kBlack);
    cv.text(x - text_width(lab) / 2, y0 + 7, lab, kBlack);
  }
  for (size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    const Rgb c = kPalette[si % std::size(kPalette)];
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      const double cx = px(s.x[i]), cy = py(s.y[i]);
      cv.rect(static_cast<int>(cx) - 2, static_cast<int>(cy) - 2, static_cast<int>(cx) + 2, static_cast<int>(cy) + 2, c);
      if (i + 1 < s.x.size() && std::isfinite(s.y[i + 1])) cv.line(cx, cy, px(s.x[i + 1]), py(s.y[i + 1]), c, 2);
    }
    const int ly = f.top + 4 + static_cast<int>(si) * (kGlyphH + 4);
    cv.rect(x1 - 120, ly + 3, x1 - 108, ly + 7, c);
    cv.text(x1 - 102, ly, s.label, kBlack);
  }
  write_png(cv.image(), png);
}

void write_bar_chart(const BarChart& chart, const std::filesystem::path& png, int width, int height) {
  if (chart.categories.size() != chart.values.size()) throw Error(ErrorKind::Shape, "bar chart size mismatch");
  if (chart.values.empty()) throw Error(ErrorKind::EmptySet, "bar chart has no bars");
  double lo = 0.0, hi = 0.0;
  for (double v : chart.values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const Range yr = padded(lo, hi);
  Canvas cv(width, height);
  Frame f;
  draw_axes(cv, f, chart.title, "", chart.y_label, yr);
  const int x0 = f.left, x1 = width - f.right, y0 = height - f.bottom, y1 = f.top;
  auto py = [&](double y) { return static_cast<int>(std::lround(y0 - (y - yr.lo) / (yr.hi - yr.lo) * (y0 - y1))); };
  const double slot = static_cast<double>(x1 - x0) / static_cast<double>(chart.values.size());
  for (size_t i = 0; i < chart.values.size(); ++i) {
    const int a = static_cast<int>(x0 + slot * (i + 0.2));
    const int b = static_cast<int>(x0 + slot * (i + 0.8));
    if (std::isfinite(chart.values[i])) cv.rect(a, py(0.0), b, py(chart.values[i]), kPalette[i % std::size(kPalette)]);
    const std::string& lab = chart.categories[i];
    cv.text((a + b - text_width(lab)) / 2, y0 + 7, lab, kBlack);
    const std::string val = tick_label(chart.values[i]);
    cv.text((a + b - text_width(val)) / 2, y0 + 7 + kGlyphH + 2, val, kBlack);
  }
  write_png(cv.image(), png);
}

}  // namespace projgan
