#include "projgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "projgan/error.hpp"

namespace projgan {

namespace {

void require_same(const Volume& a, const Volume& b) {
  if (!(a.shape() == b.shape())) throw Error(ErrorKind::Shape, "volume shape mismatch");
}

void require_pairs(size_t gt, size_t pred) {
  if (gt != pred) throw Error(ErrorKind::Shape, "ground-truth and prediction sets differ in size");
  if (gt == 0) throw Error(ErrorKind::EmptySet, "metric over an empty set");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<size_t>(size));
  const double c = 0.5 * (size - 1);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double x = i - c;
    k[static_cast<size_t>(i)] = std::exp(-(x * x) / (2.0 * sigma * sigma));
    sum += k[static_cast<size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// 'valid' separable filtering of a dense rows x cols buffer.
std::vector<double> filter_valid(const std::vector<double>& img, int64_t rows, int64_t cols,
                                 const std::vector<double>& k) {
  const auto n = static_cast<int64_t>(k.size());
  const int64_t out_rows = rows - n + 1;
  const int64_t out_cols = cols - n + 1;
  std::vector<double> tmp(static_cast<size_t>(rows * out_cols));
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (int64_t i = 0; i < n; ++i) s += k[static_cast<size_t>(i)] * img[static_cast<size_t>(r * cols + c + i)];
      tmp[static_cast<size_t>(r * out_cols + c)] = s;
    }
  }
  std::vector<double> out(static_cast<size_t>(out_rows * out_cols));
  for (int64_t r = 0; r < out_rows; ++r) {
    for (int64_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (int64_t i = 0; i < n; ++i) s += k[static_cast<size_t>(i)] * tmp[static_cast<size_t>((r + i) * out_cols + c)];
      out[static_cast<size_t>(r * out_cols + c)] = s;
    }
  }
  return out;
}

struct Dense {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<double> v;
  double operator()(int64_t r, int64_t c) const { return v[static_cast<size_t>(r * cols + c)]; }
};

Dense densify(const ImageView& a) {
  Dense d{a.rows, a.cols, std::vector<double>(static_cast<size_t>(a.rows * a.cols))};
  for (int64_t r = 0; r < a.rows; ++r) {
    for (int64_t c = 0; c < a.cols; ++c) d.v[static_cast<size_t>(r * a.cols + c)] = a(r, c);
  }
  return d;
}

void require_same(const Dense& a, const Dense& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw Error(ErrorKind::Shape, "image shape mismatch");
  if (a.rows < 1 || a.cols < 1) throw Error(ErrorKind::Shape, "empty image");
}

double mae_dense(const Dense& a, const Dense& b) {
  require_same(a, b);
  double sum = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) sum += std::abs(a.v[i] - b.v[i]);
  return sum / static_cast<double>(a.v.size());
}

double mse_dense(const Dense& a, const Dense& b) {
  require_same(a, b);
  double sum = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    const double d = a.v[i] - b.v[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.v.size());
}

PsnrValue psnr_dense(const Dense& a, const Dense& b) {
  const double e = mse_dense(a, b);
  if (e <= 0.0) return {kPsnrCap, true};
  const double db = 10.0 * std::log10(kDataRange * kDataRange / e);
  if (db >= kPsnrCap) return {kPsnrCap, true};
  return {db, false};
}

double ssim_dense(const Dense& a, const Dense& b, const SsimParams& params);

// Vessel weighting in double precision on top of the float map.
Dense weighted(const ProjectionMap& map, const VesselMask& mask, const WeightingConfig& w) {
  w.validate();
  if (mask.source() != MaskSource::AnnotatedGroundTruth) {
    throw Error(ErrorKind::Source, "vessel weighting requires an annotated ground-truth mask");
  }
  if (!(map.shape() == mask.shape())) throw Error(ErrorKind::Shape, "map and mask shapes differ");
  Dense d = densify(view(map));
  const auto bits = mask.data();
  for (size_t i = 0; i < d.v.size(); ++i) {
    if (!bits[i]) d.v[i] *= w.gamma;
  }
  return d;
}

double density_of(const VesselMask& mask, int64_t l0, int64_t w0, int64_t rows, int64_t cols) {
  int64_t ones = 0;
  for (int64_t l = l0; l < l0 + rows; ++l) {
    for (int64_t w = w0; w < w0 + cols; ++w) ones += mask.at(l, w);
  }
  return static_cast<double>(ones) / static_cast<double>(rows * cols);
}

}  // namespace

ImageView bscan(const Volume& v, int64_t w) {
  const Shape3& s = v.shape();
  if (w < 0 || w >= s.W) throw Error(ErrorKind::Shape, "B-scan index out of range");
  return ImageView{v.data().data() + w * s.D, s.L, s.D, s.W * s.D, 1};
}

ImageView view(const ProjectionMap& m) {
  return ImageView{m.data().data(), m.shape().L, m.shape().W, m.shape().W, 1};
}

double mae(const ImageView& a, const ImageView& b) { return mae_dense(densify(a), densify(b)); }

double mse(const ImageView& a, const ImageView& b) { return mse_dense(densify(a), densify(b)); }

PsnrValue psnr(const ImageView& a, const ImageView& b) { return psnr_dense(densify(a), densify(b)); }

double ssim(const ImageView& a, const ImageView& b, const SsimParams& params) {
  return ssim_dense(densify(a), densify(b), params);
}

namespace {

double ssim_dense(const Dense& a, const Dense& b, const SsimParams& params) {
  require_same(a, b);
  int win = static_cast<int>(std::min<int64_t>({params.window, a.rows, a.cols}));
  if (win % 2 == 0) --win;
  const auto kernel = gaussian_kernel(win, params.sigma);
  std::vector<double> xx(a.v.size()), yy(a.v.size()), xy(a.v.size());
  for (size_t i = 0; i < a.v.size(); ++i) {
    xx[i] = a.v[i] * a.v[i];
    yy[i] = b.v[i] * b.v[i];
    xy[i] = a.v[i] * b.v[i];
  }
  const auto mx = filter_valid(a.v, a.rows, a.cols, kernel);
  const auto my = filter_valid(b.v, a.rows, a.cols, kernel);
  const auto mxx = filter_valid(xx, a.rows, a.cols, kernel);
  const auto myy = filter_valid(yy, a.rows, a.cols, kernel);
  const auto mxy = filter_valid(xy, a.rows, a.cols, kernel);
  const double c1 = (params.k1 * kDataRange) * (params.k1 * kDataRange);
  const double c2 = (params.k2 * kDataRange) * (params.k2 * kDataRange);
  double sum = 0.0;
  for (size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return sum / static_cast<double>(mx.size());
}

}  // namespace

double mae_volume(const Volume& target, const Volume& pred) {
  require_same(target, pred);
  double sum = 0.0;
  for (int64_t w = 0; w < target.shape().W; ++w) sum += mae(bscan(target, w), bscan(pred, w));
  return sum / static_cast<double>(target.shape().W);
}

PsnrValue psnr_volume(const Volume& target, const Volume& pred, int64_t* capped_slices) {
  require_same(target, pred);
  double sum = 0.0;
  int64_t capped = 0;
  for (int64_t w = 0; w < target.shape().W; ++w) {
    const PsnrValue p = psnr(bscan(target, w), bscan(pred, w));
    sum += p.db;
    capped += p.capped ? 1 : 0;
  }
  if (capped_slices) *capped_slices = capped;
  return {sum / static_cast<double>(target.shape().W), capped > 0};
}

double ssim_volume(const Volume& target, const Volume& pred) {
  require_same(target, pred);
  double sum = 0.0;
  for (int64_t w = 0; w < target.shape().W; ++w) sum += ssim(bscan(target, w), bscan(pred, w));
  return sum / static_cast<double>(target.shape().W);
}

VolumeMetrics volume_metrics(const Volume& target, const Volume& pred) {
  VolumeMetrics m;
  m.mae = mae_volume(target, pred);
  m.psnr = psnr_volume(target, pred, &m.capped_slices).db;
  m.ssim = ssim_volume(target, pred);
  return m;
}

void WeightingConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::Config, "gamma must lie in (0, 1]");
}

ProjectionMap vessel_weight(const ProjectionMap& map, const VesselMask& mask, const WeightingConfig& w) {
  w.validate();
  if (mask.source() != MaskSource::AnnotatedGroundTruth) {
    throw Error(ErrorKind::Source, "vessel weighting requires an annotated ground-truth mask");
  }
  if (!(map.shape() == mask.shape())) throw Error(ErrorKind::Shape, "map and mask shapes differ");
  ProjectionMap out = map;
  const float gamma = static_cast<float>(w.gamma);
  auto values = out.data();
  const auto bits = mask.data();
  for (size_t i = 0; i < values.size(); ++i) {
    if (!bits[i]) values[i] *= gamma;
  }
  return out;
}

WeightedMetrics weighted_metric_suite(const ProjectionMap& gt, const ProjectionMap& pred,
                                      const VesselMask& gt_mask, const WeightingConfig& w) {
  if (!(gt.shape() == pred.shape())) throw Error(ErrorKind::Shape, "map shapes differ");
  const Dense vg = weighted(gt, gt_mask, w);
  const Dense vp = weighted(pred, gt_mask, w);
  WeightedMetrics m;
  m.mae_v = mae_dense(vp, vg);
  const PsnrValue p = psnr_dense(vp, vg);
  m.psnr_v = p.db;
  m.psnr_capped = p.capped;
  m.ssim_v = ssim_dense(vp, vg, SsimParams{});
  return m;
}

VesselMask segment_global_mean_threshold(const ProjectionMap& map) {
  double sum = 0.0;
  for (float v : map.data()) sum += v;
  const double mean = sum / static_cast<double>(map.numel());
  VesselMask mask(map.shape(), MaskSource::MeanThresholdDerived);
  auto bits = mask.data();
  const auto values = map.data();
  for (size_t i = 0; i < values.size(); ++i) bits[i] = static_cast<double>(values[i]) > mean ? 1 : 0;
  return mask;
}

double vessel_density(const VesselMask& mask) {
  int64_t ones = 0;
  for (uint8_t v : mask.data()) ones += v;
  return static_cast<double>(ones) / static_cast<double>(mask.numel());
}

double vde(std::span<const ProjectionMap> gt_maps, std::span<const ProjectionMap> pred_maps) {
  require_pairs(gt_maps.size(), pred_maps.size());
  double sum = 0.0;
  for (size_t i = 0; i < gt_maps.size(); ++i) {
    if (!(gt_maps[i].shape() == pred_maps[i].shape())) throw Error(ErrorKind::Shape, "map shapes differ");
    sum += std::abs(vessel_density(segment_global_mean_threshold(pred_maps[i])) -
                    vessel_density(segment_global_mean_threshold(gt_maps[i])));
  }
  return sum / static_cast<double>(gt_maps.size());
}

DensityArray density_array(const VesselMask& mask, int64_t patch) {
  const Shape2& s = mask.shape();
  if (patch < 1 || patch > s.L || patch > s.W) {
    throw Error(ErrorKind::Shape, "patch of " + std::to_string(patch) + " px does not fit the map");
  }
  DensityArray out;
  out.patch = patch;
  const int64_t rows = s.L / patch;
  const int64_t cols = s.W / patch;
  const int64_t l0 = (s.L - rows * patch) / 2;
  const int64_t w0 = (s.W - cols * patch) / 2;
  out.cropped = rows * patch != s.L || cols * patch != s.W;
  out.values.reserve(static_cast<size_t>(rows * cols));
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) {
      out.values.push_back(density_of(mask, l0 + r * patch, w0 + c * patch, patch, patch));
    }
  }
  return out;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Shape, "pearson: length mismatch");
  if (a.empty()) throw Error(ErrorKind::EmptySet, "pearson of empty arrays");
  const auto n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0.0 || vb <= 0.0) return std::nullopt;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

VdcResult vdc(std::span<const ProjectionMap> gt_maps, std::span<const ProjectionMap> pred_maps, int64_t patch) {
  require_pairs(gt_maps.size(), pred_maps.size());
  VdcResult out;
  double sum = 0.0;
  for (size_t i = 0; i < gt_maps.size(); ++i) {
    if (!(gt_maps[i].shape() == pred_maps[i].shape())) throw Error(ErrorKind::Shape, "map shapes differ");
    const DensityArray g = density_array(segment_global_mean_threshold(gt_maps[i]), patch);
    const DensityArray p = density_array(segment_global_mean_threshold(pred_maps[i]), patch);
    out.cropped = out.cropped || g.cropped;
    const auto r = pearson(p.values, g.values);
    out.per_pair.push_back(r);
    if (r) {
      sum += *r;
    } else {
      ++out.degenerate_pairs;
    }
  }
  out.value = sum / static_cast<double>(gt_maps.size());
  return out;
}

std::vector<double> default_gamma_list() {
  std::vector<double> g;
  for (int k = 10; k >= 1; --k) g.push_back(k / 10.0);
  return g;
}

GammaSeries gamma_sweep(std::span<const ProjectionMap> gt_maps, std::span<const ProjectionMap> pred_maps,
                        std::span<const VesselMask> gt_masks, std::span<const double> gammas) {
  require_pairs(gt_maps.size(), pred_maps.size());
  if (gt_masks.size() != gt_maps.size()) throw Error(ErrorKind::Shape, "one mask per ground-truth map required");
  GammaSeries series;
  const auto n = static_cast<double>(gt_maps.size());
  for (double gamma : gammas) {
    const WeightingConfig w{gamma};
    double m = 0.0, p = 0.0, s = 0.0;
    for (size_t i = 0; i < gt_maps.size(); ++i) {
      const WeightedMetrics r = weighted_metric_suite(gt_maps[i], pred_maps[i], gt_masks[i], w);
      m += r.mae_v;
      p += r.psnr_v;
      s += r.ssim_v;
    }
    series.gammas.push_back(gamma);
    series.mae_v.push_back(m / n);
    series.psnr_v.push_back(p / n);
    series.ssim_v.push_back(s / n);
  }
  return series;
}

}  // namespace projgan
