#include "projgan/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "projgan/checkpoint.hpp"
#include "projgan/error.hpp"
#include "projgan/json_util.hpp"
#include "projgan/plot.hpp"

namespace projgan {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(stable_number(v)) : json(nullptr); }
json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::string dataset_hash_of(const fs::path& dataset) {
  return load_manifest(dataset).value("dataset_hash", std::string{});
}

std::vector<DatasetSample> test_split(const fs::path& dataset) {
  if (!fs::exists(dataset)) throw Error(ErrorKind::Io, "dataset " + dataset.string() + " does not exist");
  auto gt = load_split(dataset, "test");
  if (gt.empty()) throw Error(ErrorKind::EmptySet, "test split is empty");
  return gt;
}

}  // namespace

const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows{
      {"OCTA-3M", 0.0782, 32.56, 0.8822, 0.0658, 20.42, 0.9179, 0.1304, 0.7441},
      {"OCTA-6M", 0.0854, std::nullopt, std::nullopt, std::nullopt, std::nullopt, std::nullopt, 0.1492, 0.7347},
  };
  return rows;
}

std::string base_config_hash(const ExperimentConfig& config) {
  json j = config;
  for (const char* key : {"weights", "seed", "name", "output_root", "dataset", "ablation"}) j.erase(key);
  return json_hash(j);
}

EvalContext eval_context(const ExperimentConfig& config) {
  return EvalContext{config.metrics, config_hash(config), base_config_hash(config)};
}

MetricsReport compute_metrics_report(const std::vector<DatasetSample>& gt, const std::vector<Volume>& preds,
                                     const EvalContext& ctx) {
  if (gt.empty()) throw Error(ErrorKind::EmptySet, "nothing to evaluate");
  if (gt.size() != preds.size()) throw Error(ErrorKind::Shape, "prediction count differs from ground truth count");
  const WeightingConfig weighting{ctx.metrics.gamma};
  weighting.validate();

  MetricsReport r;
  r.gamma = ctx.metrics.gamma;
  r.patch = ctx.metrics.patch;
  r.config_hash = ctx.config_hash;
  r.base_config_hash = ctx.base_config_hash;

  std::vector<ProjectionMap> gt_maps, pred_maps;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (!(gt[i].octa.shape() == preds[i].shape())) {
      throw Error(ErrorKind::Shape, "prediction for " + gt[i].name + " has a different shape");
    }
    SampleMetrics s;
    s.name = gt[i].name;
    int64_t capped = 0;
    s.mae = mae_volume(gt[i].octa, preds[i]);
    s.psnr = psnr_volume(gt[i].octa, preds[i], &capped).db;
    s.ssim = ssim_volume(gt[i].octa, preds[i]);
    r.psnr_capped_slices += capped;
    gt_maps.push_back(project_mean(gt[i].octa));
    pred_maps.push_back(project_mean(preds[i]));
    const WeightedMetrics wm = weighted_metric_suite(gt_maps.back(), pred_maps.back(), gt[i].mask, weighting);
    s.mae_v = wm.mae_v;
    s.psnr_v = wm.psnr_v;
    s.ssim_v = wm.ssim_v;
    if (wm.psnr_capped) ++r.psnr_v_capped_samples;
    s.vd_gt = vessel_density(segment_global_mean_threshold(gt_maps.back()));
    s.vd_pred = vessel_density(segment_global_mean_threshold(pred_maps.back()));
    r.samples.push_back(std::move(s));
  }
  const VdcResult vr = vdc(gt_maps, pred_maps, ctx.metrics.patch);
  for (size_t i = 0; i < r.samples.size(); ++i) r.samples[i].vdc = vr.per_pair[i];
  r.vdc_degenerate_pairs = vr.degenerate_pairs;
  r.density_cropped = vr.cropped;

  const double n = static_cast<double>(r.samples.size());
  AggregateMetrics& a = r.aggregate;
  for (const auto& s : r.samples) {
    a.mae += s.mae / n;
    a.psnr += s.psnr / n;
    a.ssim += s.ssim / n;
    a.mae_v += s.mae_v / n;
    a.psnr_v += s.psnr_v / n;
    a.ssim_v += s.ssim_v / n;
  }
  a.vde = vde(gt_maps, pred_maps);
  a.vdc = vr.value;
  return r;
}

MetricsReport evaluate_checkpoint(const fs::path& g3d_checkpoint, const fs::path& dataset, const EvalContext& ctx) {
  const auto gt = test_split(dataset);
  const Translator translator(g3d_checkpoint);
  std::vector<Volume> preds;
  preds.reserve(gt.size());
  for (const auto& s : gt) preds.push_back(translator(s.oct));
  MetricsReport r = compute_metrics_report(gt, preds, ctx);
  r.source_kind = "checkpoint";
  r.source_digest = translator.info().parameter_digest;
  r.dataset_hash = dataset_hash_of(dataset);
  return r;
}

MetricsReport evaluate_predictions(const fs::path& pred_dir, const fs::path& dataset, const EvalContext& ctx) {
  const auto gt = test_split(dataset);
  std::vector<std::string> names;
  for (const auto& s : gt) names.push_back(s.name);
  MetricsReport r = compute_metrics_report(gt, load_predictions(pred_dir, names), ctx);
  r.source_kind = "predictions";
  r.dataset_hash = dataset_hash_of(dataset);
  return r;
}

json report_json(const MetricsReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back(json{{"name", s.name},
                           {"mae", num(s.mae)},
                           {"psnr", num(s.psnr)},
                           {"ssim", num(s.ssim)},
                           {"mae_v", num(s.mae_v)},
                           {"psnr_v", num(s.psnr_v)},
                           {"ssim_v", num(s.ssim_v)},
                           {"vd_gt", num(s.vd_gt)},
                           {"vd_pred", num(s.vd_pred)},
                           {"vdc", num(s.vdc)}});
  }
  const AggregateMetrics& a = r.aggregate;
  json refs = json::array();
  for (const auto& row : reference_rows()) {
    refs.push_back(json{{"dataset", row.dataset},
                        {"mae", num(row.mae)},
                        {"psnr", num(row.psnr)},
                        {"ssim", num(row.ssim)},
                        {"mae_v", num(row.mae_v)},
                        {"psnr_v", num(row.psnr_v)},
                        {"ssim_v", num(row.ssim_v)},
                        {"vde", num(row.vde)},
                        {"vdc", num(row.vdc)}});
  }
  return json{{"split", r.split},
              {"n", r.samples.size()},
              {"gamma", num(r.gamma)},
              {"patch", r.patch},
              {"source", {{"kind", r.source_kind}, {"parameter_digest", r.source_digest}}},
              {"dataset_hash", r.dataset_hash},
              {"config_hash", r.config_hash},
              {"base_config_hash", r.base_config_hash},
              {"aggregate",
               {{"mae", num(a.mae)},
                {"psnr", num(a.psnr)},
                {"ssim", num(a.ssim)},
                {"mae_v", num(a.mae_v)},
                {"psnr_v", num(a.psnr_v)},
                {"ssim_v", num(a.ssim_v)},
                {"vde", num(a.vde)},
                {"vdc", num(a.vdc)}}},
              {"flags",
               {{"vdc_degenerate_pairs", r.vdc_degenerate_pairs},
                {"psnr_capped_slices", r.psnr_capped_slices},
                {"psnr_v_capped_samples", r.psnr_v_capped_samples},
                {"density_cropped", r.density_cropped}}},
              {"samples", samples},
              {"reference", {{"label", kReferenceLabel}, {"rows", refs}}}};
}

std::string report_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "name,mae,psnr,ssim,mae_v,psnr_v,ssim_v,vd_gt,vd_pred,vde,vdc\n";
  for (const auto& s : r.samples) {
    out << s.name << ',' << fmt(s.mae) << ',' << fmt(s.psnr) << ',' << fmt(s.ssim) << ',' << fmt(s.mae_v) << ','
        << fmt(s.psnr_v) << ',' << fmt(s.ssim_v) << ',' << fmt(s.vd_gt) << ',' << fmt(s.vd_pred) << ','
        << fmt(std::abs(s.vd_pred - s.vd_gt)) << ',' << fmt(s.vdc) << '\n';
  }
  const AggregateMetrics& a = r.aggregate;
  out << "mean," << fmt(a.mae) << ',' << fmt(a.psnr) << ',' << fmt(a.ssim) << ',' << fmt(a.mae_v) << ','
      << fmt(a.psnr_v) << ',' << fmt(a.ssim_v) << ",,," << fmt(a.vde) << ',' << fmt(a.vdc) << '\n';
  return out.str();
}

void write_metrics_report(const MetricsReport& r, const fs::path& dir) {
  fs::create_directories(dir);
  write_json_file(report_json(r), dir / "metrics.json");
  write_text(report_csv(r), dir / "metrics.csv");
  BarChart mae{"Per-sample MAE", "MAE", {}, {}};
  BarChart corr{"Per-sample VDC", "VDC", {}, {}};
  for (const auto& s : r.samples) {
    mae.categories.push_back(s.name.substr(s.name.size() > 4 ? s.name.size() - 4 : 0));
    mae.values.push_back(s.mae);
    corr.categories.push_back(mae.categories.back());
    corr.values.push_back(s.vdc.value_or(0.0));
  }
  write_bar_chart(mae, dir / "per_sample_mae.png");
  write_bar_chart(corr, dir / "per_sample_vdc.png");
}

GammaSeries sweep_gamma_predictions(const std::vector<DatasetSample>& gt, const std::vector<Volume>& preds) {
  if (gt.empty()) throw Error(ErrorKind::EmptySet, "nothing to sweep");
  if (gt.size() != preds.size()) throw Error(ErrorKind::Shape, "prediction count differs from ground truth count");
  std::vector<ProjectionMap> gt_maps, pred_maps;
  std::vector<VesselMask> masks;
  for (size_t i = 0; i < gt.size(); ++i) {
    gt_maps.push_back(project_mean(gt[i].octa));
    pred_maps.push_back(project_mean(preds[i]));
    masks.push_back(gt[i].mask);
  }
  const auto gammas = default_gamma_list();
  return gamma_sweep(gt_maps, pred_maps, masks, gammas);
}

void write_gamma_sweep(const GammaSeries& s, const fs::path& dir) {
  fs::create_directories(dir);
  json j = json::object();
  std::vector<double> g, m, p, q;
  for (size_t i = 0; i < s.gammas.size(); ++i) {
    g.push_back(stable_number(s.gammas[i]));
    m.push_back(stable_number(s.mae_v[i]));
    p.push_back(stable_number(s.psnr_v[i]));
    q.push_back(stable_number(s.ssim_v[i]));
  }
  j["gamma"] = g;
  j["mae_v"] = m;
  j["psnr_v"] = p;
  j["ssim_v"] = q;
  write_json_file(j, dir / "gamma_sweep.json");
  std::ostringstream csv;
  csv << "gamma,mae_v,psnr_v,ssim_v\n";
  for (size_t i = 0; i < s.gammas.size(); ++i) {
    csv << fmt(s.gammas[i]) << ',' << fmt(s.mae_v[i]) << ',' << fmt(s.psnr_v[i]) << ',' << fmt(s.ssim_v[i]) << '\n';
  }
  write_text(csv.str(), dir / "gamma_sweep.csv");
  const struct {
    const char* file;
    const char* label;
    const std::vector<double>* y;
  } charts[] = {{"gamma_mae_v.png", "MAE-V", &s.mae_v},
                {"gamma_psnr_v.png", "PSNR-V (dB)", &s.psnr_v},
                {"gamma_ssim_v.png", "SSIM-V", &s.ssim_v}};
  for (const auto& c : charts) {
    LineChart chart{std::string(c.label) + " vs gamma", "gamma", c.label, {{c.label, s.gammas, *c.y}}, true};
    write_line_chart(chart, dir / c.file);
  }
}

ComparisonTable merge_reports(const std::vector<std::pair<std::string, json>>& reports) {
  if (reports.empty()) throw Error(ErrorKind::EmptySet, "no reports to merge");
  ComparisonTable t;
  for (const auto& [label, j] : reports) {
    try {
      const json& a = j.at("aggregate");
      auto get = [&](const char* k) { return a.at(k).is_null() ? NAN : a.at(k).get<double>(); };
      ComparisonRow row{label, get("mae"), get("psnr"), get("ssim"), get("vde"), get("vdc"),
                        j.value("dataset_hash", std::string{}), j.value("base_config_hash", std::string{})};
      t.rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, "report '" + label + "': " + e.what());
    }
  }
  for (const auto& row : t.rows) {
    if (row.dataset_hash != t.rows.front().dataset_hash) t.dataset_mismatch = true;
    if (row.base_config_hash != t.rows.front().base_config_hash) t.config_mismatch = true;
  }
  if (t.dataset_mismatch) t.warnings.emplace_back("runs were evaluated on different datasets");
  if (t.config_mismatch) t.warnings.emplace_back("runs differ in configuration beyond loss weights and seed");
  return t;
}

ComparisonTable merge_run_dirs(const std::vector<fs::path>& run_dirs) {
  std::vector<std::pair<std::string, json>> reports;
  for (const auto& dir : run_dirs) {
    const fs::path file = dir / "report" / "metrics.json";
    if (!fs::exists(file)) throw Error(ErrorKind::Io, "missing " + file.string());
    reports.emplace_back(fs::path(dir).lexically_normal().filename().string().empty()
                             ? dir.parent_path().filename().string()
                             : dir.lexically_normal().filename().string(),
                         read_json_file(file));
  }
  return merge_reports(reports);
}

std::string comparison_text(const ComparisonTable& t) {
  size_t width = 8;
  for (const auto& r : t.rows) width = std::max(width, r.label.size() + 2);
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s %10s %10s %10s %10s %10s\n", static_cast<int>(width), "run", "MAE", "PSNR",
                "SSIM", "VDE", "VDC");
  out << buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%-*s %10.4f %10.2f %10.4f %10.4f %10.4f\n", static_cast<int>(width),
                  r.label.c_str(), r.mae, r.psnr, r.ssim, r.vde, r.vdc);
    out << buf;
  }
  out << "dataset_mismatch: " << (t.dataset_mismatch ? "yes" : "no") << "\n";
  out << "config_mismatch: " << (t.config_mismatch ? "yes" : "no") << "\n";
  for (const auto& w : t.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string comparison_csv(const ComparisonTable& t) {
  std::ostringstream out;
  out << "run,mae,psnr,ssim,vde,vdc\n";
  for (const auto& r : t.rows) {
    out << r.label << ',' << fmt(r.mae) << ',' << fmt(r.psnr) << ',' << fmt(r.ssim) << ',' << fmt(r.vde) << ','
        << fmt(r.vdc) << '\n';
  }
  return out.str();
}

void write_comparison(const ComparisonTable& t, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(comparison_text(t), dir / "report.txt");
  write_text(comparison_csv(t), dir / "report.csv");
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back(json{{"run", r.label},
                        {"mae", num(r.mae)},
                        {"psnr", num(r.psnr)},
                        {"ssim", num(r.ssim)},
                        {"vde", num(r.vde)},
                        {"vdc", num(r.vdc)},
                        {"dataset_hash", r.dataset_hash}});
  }
  write_json_file(json{{"rows", rows},
                       {"dataset_mismatch", t.dataset_mismatch},
                       {"config_mismatch", t.config_mismatch},
                       {"warnings", t.warnings}},
                  dir / "report.json");
  const struct {
    const char* key;
    const char* label;
    double ComparisonRow::*field;
  } metrics[] = {{"mae", "MAE", &ComparisonRow::mae},
                 {"psnr", "PSNR (dB)", &ComparisonRow::psnr},
                 {"ssim", "SSIM", &ComparisonRow::ssim},
                 {"vde", "VDE", &ComparisonRow::vde},
                 {"vdc", "VDC", &ComparisonRow::vdc}};
  for (const auto& m : metrics) {
    BarChart chart{m.label, m.label, {}, {}};
    for (const auto& r : t.rows) {
      chart.categories.push_back(r.label.size() > 14 ? r.label.substr(r.label.size() - 14) : r.label);
      chart.values.push_back(r.*(m.field));
    }
    write_bar_chart(chart, dir / (std::string("report_") + m.key + ".png"));
  }
}

AblationResult run_ablation(const ExperimentConfig& config, fs::path vseg_checkpoint, fs::path gpre_checkpoint,
                            const TrainOptions& options) {
  config.validate();
  if (config.ablation.variants.empty()) throw Error(ErrorKind::Config, "ablation.variants is empty");
  if (vseg_checkpoint.empty()) vseg_checkpoint = pretrain_vseg(config, options).best_checkpoint;
  if (gpre_checkpoint.empty()) gpre_checkpoint = pretrain_hcg(config, options).best_checkpoint;

  AblationResult result;
  std::vector<std::pair<std::string, json>> reports;
  for (const auto& variant : config.ablation.variants) {
    ExperimentConfig vc = config;
    vc.name = config.name + "_" + variant;
    vc.weights = ablation_weights(variant, config.weights);
    StageResult trained = train_transpro(vc, vseg_checkpoint, gpre_checkpoint, options);
    MetricsReport report = evaluate_checkpoint(trained.best_checkpoint, vc.dataset, eval_context(vc));
    write_metrics_report(report, vc.run_dir() / "report");
    reports.emplace_back(variant, report_json(report));
    result.variants.push_back(variant);
    result.training.push_back(std::move(trained));
    result.reports.push_back(std::move(report));
  }
  result.table = merge_reports(reports);
  result.report_dir = config.run_dir() / "ablation";
  write_comparison(result.table, result.report_dir);
  return result;
}

}  // namespace projgan
