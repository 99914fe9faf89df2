#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "projgan/volume.hpp"

namespace projgan {

// Strided read-only view of a 2D image; used for B-scans (fixed W planes of a
// volume) and projection maps without copying.
struct ImageView {
  const float* data = nullptr;
  int64_t rows = 0;
  int64_t cols = 0;
  int64_t row_stride = 0;
  int64_t col_stride = 1;

  float operator()(int64_t r, int64_t c) const { return data[r * row_stride + c * col_stride]; }
};

ImageView bscan(const Volume& v, int64_t w);
ImageView view(const ProjectionMap& m);

inline constexpr double kPsnrCap = 100.0;
inline constexpr double kDataRange = 1.0;

struct PsnrValue {
  double db = 0.0;
  bool capped = false;
};

double mae(const ImageView& a, const ImageView& b);
double mse(const ImageView& a, const ImageView& b);
PsnrValue psnr(const ImageView& a, const ImageView& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Gaussian-window SSIM averaged over all fully contained window positions.
// Images smaller than the window shrink it to the largest odd size that fits.
double ssim(const ImageView& a, const ImageView& b, const SsimParams& params = {});

struct VolumeMetrics {
  double mae = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  int64_t capped_slices = 0;
};

// Each metric is computed per B-scan and averaged over W.
double mae_volume(const Volume& target, const Volume& pred);
PsnrValue psnr_volume(const Volume& target, const Volume& pred, int64_t* capped_slices = nullptr);
double ssim_volume(const Volume& target, const Volume& pred);
VolumeMetrics volume_metrics(const Volume& target, const Volume& pred);

struct WeightingConfig {
  double gamma = 0.1;
  void validate() const;
};

// Scales non-vessel pixels by gamma; requires an annotated mask.
ProjectionMap vessel_weight(const ProjectionMap& map, const VesselMask& mask, const WeightingConfig& w);

struct WeightedMetrics {
  double mae_v = 0.0;
  double psnr_v = 0.0;
  double ssim_v = 0.0;
  bool psnr_capped = false;
};

WeightedMetrics weighted_metric_suite(const ProjectionMap& gt, const ProjectionMap& pred,
                                      const VesselMask& gt_mask, const WeightingConfig& w);

// Pixel is vessel iff strictly above the map's mean.
VesselMask segment_global_mean_threshold(const ProjectionMap& map);

double vessel_density(const VesselMask& mask);

// Mean |VD(pred_i) - VD(gt_i)| with threshold-derived masks on both sides.
double vde(std::span<const ProjectionMap> gt_maps, std::span<const ProjectionMap> pred_maps);

inline constexpr int64_t kDefaultPatch = 16;

struct DensityArray {
  std::vector<double> values;  // raster order over the patch grid
  int64_t patch = kDefaultPatch;
  bool cropped = false;        // map was center-cropped to a divisible region
};

DensityArray density_array(const VesselMask& mask, int64_t patch = kDefaultPatch);

// nullopt when either array has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct VdcResult {
  double value = 0.0;
  std::vector<std::optional<double>> per_pair;
  int64_t degenerate_pairs = 0;
  bool cropped = false;
};

VdcResult vdc(std::span<const ProjectionMap> gt_maps, std::span<const ProjectionMap> pred_maps,
              int64_t patch = kDefaultPatch);

struct GammaSeries {
  std::vector<double> gammas;
  std::vector<double> mae_v;
  std::vector<double> psnr_v;
  std::vector<double> ssim_v;
};

// {1.0, 0.9, ..., 0.1}
std::vector<double> default_gamma_list();

GammaSeries gamma_sweep(std::span<const ProjectionMap> gt_maps, std::span<const ProjectionMap> pred_maps,
                        std::span<const VesselMask> gt_masks, std::span<const double> gammas);

}  // namespace projgan
