#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "projgan/config.hpp"
#include "projgan/dataset.hpp"
#include "projgan/metrics.hpp"
#include "projgan/trainer.hpp"

namespace projgan {

struct SampleMetrics {
  std::string name;
  double mae = 0.0, psnr = 0.0, ssim = 0.0;
  double mae_v = 0.0, psnr_v = 0.0, ssim_v = 0.0;
  double vd_gt = 0.0, vd_pred = 0.0;
  std::optional<double> vdc;  // nullopt for a degenerate (constant density) pair
};

struct AggregateMetrics {
  double mae = 0.0, psnr = 0.0, ssim = 0.0;
  double mae_v = 0.0, psnr_v = 0.0, ssim_v = 0.0;
  double vde = 0.0, vdc = 0.0;
};

struct MetricsReport {
  std::string split = "test";
  std::string source_kind;    // "checkpoint" or "predictions"
  std::string source_digest;  // checkpoint parameter digest, empty for predictions
  std::string dataset_hash;
  std::string config_hash;
  std::string base_config_hash;  // config hash with the loss weights and seed left out
  double gamma = 0.1;
  int64_t patch = kDefaultPatch;
  std::vector<SampleMetrics> samples;
  AggregateMetrics aggregate;
  int64_t vdc_degenerate_pairs = 0;
  int64_t psnr_capped_slices = 0;
  int64_t psnr_v_capped_samples = 0;
  bool density_cropped = false;
};

// Published TransPro numbers on OCTA-500; documentation only.
struct ReferenceRow {
  const char* dataset;
  std::optional<double> mae, psnr, ssim, mae_v, psnr_v, ssim_v, vde, vdc;
};
inline constexpr const char* kReferenceLabel = "published reference (OCTA-500), not expected on phantoms";
const std::vector<ReferenceRow>& reference_rows();

struct EvalContext {
  MetricsSection metrics;
  std::string config_hash;
  std::string base_config_hash;
};
EvalContext eval_context(const ExperimentConfig& config);
std::string base_config_hash(const ExperimentConfig& config);

MetricsReport compute_metrics_report(const std::vector<DatasetSample>& gt, const std::vector<Volume>& preds,
                                     const EvalContext& ctx);

// Translates every test volume with the 3D generator and scores it.
MetricsReport evaluate_checkpoint(const std::filesystem::path& g3d_checkpoint, const std::filesystem::path& dataset,
                                  const EvalContext& ctx);
// Scores <pred_dir>/<name>/octa.raw against the test split.
MetricsReport evaluate_predictions(const std::filesystem::path& pred_dir, const std::filesystem::path& dataset,
                                   const EvalContext& ctx);

nlohmann::json report_json(const MetricsReport& r);
std::string report_csv(const MetricsReport& r);
// metrics.json, metrics.csv, per_sample_mae.png, per_sample_vdc.png
void write_metrics_report(const MetricsReport& r, const std::filesystem::path& dir);

// gamma_sweep.json, gamma_sweep.csv, gamma_{mae_v,psnr_v,ssim_v}.png
GammaSeries sweep_gamma_predictions(const std::vector<DatasetSample>& gt, const std::vector<Volume>& preds);
void write_gamma_sweep(const GammaSeries& s, const std::filesystem::path& dir);

struct ComparisonRow {
  std::string label;
  double mae = 0.0, psnr = 0.0, ssim = 0.0, vde = 0.0, vdc = 0.0;
  std::string dataset_hash;
  std::string base_config_hash;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // in the order given
  bool dataset_mismatch = false;
  bool config_mismatch = false;
  std::vector<std::string> warnings;
};

ComparisonTable merge_reports(const std::vector<std::pair<std::string, nlohmann::json>>& reports);
// Loads <run_dir>/report/metrics.json for each run, labelled by directory name.
ComparisonTable merge_run_dirs(const std::vector<std::filesystem::path>& run_dirs);
std::string comparison_text(const ComparisonTable& t);
std::string comparison_csv(const ComparisonTable& t);
// report.txt, report.csv, report.json, report_<metric>.png
void write_comparison(const ComparisonTable& t, const std::filesystem::path& dir);

struct AblationResult {
  std::vector<std::string> variants;
  std::vector<StageResult> training;
  std::vector<MetricsReport> reports;
  ComparisonTable table;
  std::filesystem::path report_dir;
};

// Trains each configured variant with shared seeds and guidance checkpoints.
// Empty checkpoint paths pretrain the guidance networks under config.run_dir().
AblationResult run_ablation(const ExperimentConfig& config, std::filesystem::path vseg_checkpoint = {},
                            std::filesystem::path gpre_checkpoint = {}, const TrainOptions& options = {});

}  // namespace projgan
