#pragma once

// Brute-force reference implementations used only by tests. They share no
// code with src/ and favour directness over speed.

#include <algorithm>
#include <cmath>
#include <vector>

#include "projgan/volume.hpp"

namespace oracle {

using Img = std::vector<std::vector<double>>;

inline Img bscan(const projgan::Volume& v, int64_t w) {
  const auto s = v.shape();
  Img out(static_cast<size_t>(s.L), std::vector<double>(static_cast<size_t>(s.D)));
  for (int64_t l = 0; l < s.L; ++l)
    for (int64_t d = 0; d < s.D; ++d) out[l][d] = v.at(l, w, d);
  return out;
}

inline Img map(const projgan::ProjectionMap& m) {
  Img out(static_cast<size_t>(m.shape().L), std::vector<double>(static_cast<size_t>(m.shape().W)));
  for (int64_t l = 0; l < m.shape().L; ++l)
    for (int64_t w = 0; w < m.shape().W; ++w) out[l][w] = m.at(l, w);
  return out;
}

inline double mae(const Img& a, const Img& b) {
  double s = 0;
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[i].size(); ++j, ++n) s += std::fabs(a[i][j] - b[i][j]);
  return s / static_cast<double>(n);
}

inline double psnr(const Img& a, const Img& b) {
  double s = 0;
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < a[i].size(); ++j, ++n) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  const double mse = s / static_cast<double>(n);
  if (mse == 0.0) return 100.0;
  return std::min(100.0, -10.0 * std::log10(mse));
}

// Gaussian-window SSIM evaluated window by window with centered moments.
inline double ssim(const Img& a, const Img& b) {
  const int rows = static_cast<int>(a.size()), cols = static_cast<int>(a[0].size());
  int win = std::min({11, rows, cols});
  if (win % 2 == 0) --win;
  std::vector<std::vector<double>> w(win, std::vector<double>(win));
  double total = 0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const double di = i - (win - 1) / 2.0, dj = j - (win - 1) / 2.0;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += w[i][j];
    }
  for (auto& r : w)
    for (auto& x : r) x /= total;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double sum = 0;
  int count = 0;
  for (int r0 = 0; r0 + win <= rows; ++r0)
    for (int q0 = 0; q0 + win <= cols; ++q0) {
      double mx = 0, my = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          mx += w[i][j] * a[r0 + i][q0 + j];
          my += w[i][j] * b[r0 + i][q0 + j];
        }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double dx = a[r0 + i][q0 + j] - mx, dy = b[r0 + i][q0 + j] - my;
          vx += w[i][j] * dx * dx;
          vy += w[i][j] * dy * dy;
          cxy += w[i][j] * dx * dy;
        }
      sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return sum / count;
}

template <class F>
double per_bscan(const projgan::Volume& a, const projgan::Volume& b, F f) {
  double s = 0;
  for (int64_t w = 0; w < a.shape().W; ++w) s += f(bscan(a, w), bscan(b, w));
  return s / static_cast<double>(a.shape().W);
}

inline Img weight(const Img& m, const projgan::VesselMask& mask, double gamma) {
  Img out = m;
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = 0; j < out[i].size(); ++j)
      if (mask.at(static_cast<int64_t>(i), static_cast<int64_t>(j)) == 0) out[i][j] *= gamma;
  return out;
}

// Two passes: the mean first, then a strict comparison.
inline std::vector<std::vector<int>> threshold(const Img& m) {
  double mean = 0;
  size_t n = 0;
  for (const auto& r : m)
    for (double x : r) {
      mean += x;
      ++n;
    }
  mean /= static_cast<double>(n);
  std::vector<std::vector<int>> out(m.size(), std::vector<int>(m[0].size()));
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = 0; j < m[i].size(); ++j) out[i][j] = m[i][j] > mean ? 1 : 0;
  return out;
}

inline double density(const std::vector<std::vector<int>>& mask) {
  double ones = 0, n = 0;
  for (const auto& r : mask)
    for (int x : r) {
      ones += x;
      n += 1;
    }
  return ones / n;
}

inline std::vector<double> patch_densities(const std::vector<std::vector<int>>& mask, int patch) {
  std::vector<double> out;
  const int rows = static_cast<int>(mask.size()) / patch, cols = static_cast<int>(mask[0].size()) / patch;
  for (int pr = 0; pr < rows; ++pr)
    for (int pc = 0; pc < cols; ++pc) {
      int ones = 0;
      for (int i = 0; i < patch; ++i)
        for (int j = 0; j < patch; ++j) ones += mask[pr * patch + i][pc * patch + j];
      out.push_back(static_cast<double>(ones) / (patch * patch));
    }
  return out;
}

// Pearson correlation from explicit covariance and standard deviations.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b, bool* degenerate) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb) / n;
    va += (a[i] - ma) * (a[i] - ma) / n;
    vb += (b[i] - mb) * (b[i] - mb) / n;
  }
  *degenerate = va == 0.0 || vb == 0.0;
  return *degenerate ? 0.0 : cov / (std::sqrt(va) * std::sqrt(vb));
}

}  // namespace oracle
