#include <fstream>
#include <sstream>

#include "test_prelude.hpp"
#include "helpers.hpp"
#include "projgan/dataset.hpp"
#include "projgan/error.hpp"
#include "projgan/evaluation.hpp"
#include "projgan/json_util.hpp"
#include "projgan/phantom.hpp"

using namespace projgan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Data {
  testing::TempDir dir{"evaluation"};
  fs::path root = dir.path() / "dataset";
  PhantomConfig phantom;

  Data() {
    phantom.shape = {32, 32, 8};
    generate_dataset({1, 1, 3}, 4, phantom, root);
  }
};

Data& data() {
  static Data d;
  return d;
}

json fake_report(double mae, const std::string& dataset, const std::string& base) {
  return json{{"dataset_hash", dataset},
              {"base_config_hash", base},
              {"aggregate", {{"mae", mae}, {"psnr", 30.0}, {"ssim", 0.9}, {"vde", 0.1}, {"vdc", 0.7}}}};
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("identity experiment scores perfectly") {
    auto& d = data();
    const EvalContext ctx = eval_context(ExperimentConfig{});
    const MetricsReport r = evaluate_predictions(d.root / "test", d.root, ctx);
    REQUIRE(r.samples.size() == 3);
    CHECK(r.aggregate.mae == 0.0);
    CHECK(r.aggregate.vde == 0.0);
    CHECK(r.aggregate.vdc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.aggregate.ssim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.aggregate.psnr == kPsnrCap);
    CHECK(r.aggregate.mae_v == 0.0);
    CHECK(r.psnr_capped_slices == 3 * 32);
    CHECK(r.source_kind == "predictions");
    CHECK(r.dataset_hash == load_manifest(d.root).at("dataset_hash").get<std::string>());
  }

  TEST_CASE("aggregates are sample means") {
    auto& d = data();
    const auto gt = load_split(d.root, "test");
    std::vector<Volume> preds;
    std::mt19937_64 rng(3);
    for (const auto& s : gt) preds.push_back(testing::random_volume(s.octa.shape(), rng));
    const MetricsReport r = compute_metrics_report(gt, preds, eval_context(ExperimentConfig{}));
    double mae = 0, vde = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
      CHECK(r.samples[i].mae == doctest::Approx(mae_volume(gt[i].octa, preds[i])).epsilon(1e-12));
      mae += r.samples[i].mae;
      vde += std::fabs(r.samples[i].vd_pred - r.samples[i].vd_gt);
    }
    CHECK(r.aggregate.mae == doctest::Approx(mae / 3).epsilon(1e-12));
    CHECK(r.aggregate.vde == doctest::Approx(vde / 3).epsilon(1e-12));
  }

  TEST_CASE("written reports are byte-identical across runs") {
    auto& d = data();
    const EvalContext ctx = eval_context(ExperimentConfig{});
    testing::TempDir out("evaluation_out");
    write_metrics_report(evaluate_predictions(d.root / "test", d.root, ctx), out.path() / "a");
    write_metrics_report(evaluate_predictions(d.root / "test", d.root, ctx), out.path() / "b");
    for (const char* f : {"metrics.json", "metrics.csv", "per_sample_mae.png", "per_sample_vdc.png"}) {
      REQUIRE(fs::exists(out.path() / "a" / f));
      CHECK(slurp(out.path() / "a" / f) == slurp(out.path() / "b" / f));
    }
    const json j = read_json_file(out.path() / "a" / "metrics.json");
    CHECK(j.at("n") == 3);
    CHECK(j.at("reference").at("label") == kReferenceLabel);
  }

  TEST_CASE("reference rows hold the published numbers") {
    const auto& rows = reference_rows();
    REQUIRE(rows.size() == 2);
    CHECK(*rows[0].mae == 0.0782);
    CHECK(*rows[0].psnr == 32.56);
    CHECK(*rows[0].ssim == 0.8822);
    CHECK(*rows[0].mae_v == 0.0658);
    CHECK(*rows[0].psnr_v == 20.42);
    CHECK(*rows[0].ssim_v == 0.9179);
    CHECK(*rows[0].vde == 0.1304);
    CHECK(*rows[0].vdc == 0.7441);
    CHECK(*rows[1].mae == 0.0854);
    CHECK(*rows[1].vde == 0.1492);
    CHECK(*rows[1].vdc == 0.7347);
    CHECK_FALSE(rows[1].psnr.has_value());
  }

  TEST_CASE("missing data is reported") {
    auto& d = data();
    const EvalContext ctx = eval_context(ExperimentConfig{});
    CHECK_THROWS_AS(evaluate_predictions(d.dir.path() / "nowhere", d.root, ctx), Error);
    CHECK_THROWS_AS(evaluate_predictions(d.root / "test", d.dir.path() / "nowhere", ctx), Error);
    testing::TempDir empty("evaluation_empty");
    generate_dataset({1, 1, 0}, 4, d.phantom, empty.path() / "ds");
    try {
      evaluate_predictions(empty.path() / "ds" / "test", empty.path() / "ds", ctx);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptySet);
    }
  }

  TEST_CASE("gamma sweep of the identity is flat") {
    auto& d = data();
    const auto gt = load_split(d.root, "test");
    std::vector<Volume> preds;
    for (const auto& s : gt) preds.push_back(s.octa);
    const GammaSeries s = sweep_gamma_predictions(gt, preds);
    REQUIRE(s.gammas.size() == 10);
    for (size_t k = 0; k < 10; ++k) {
      CHECK(s.mae_v[k] == 0.0);
      CHECK(s.psnr_v[k] == kPsnrCap);
    }
    testing::TempDir out("evaluation_sweep");
    write_gamma_sweep(s, out.path());
    for (const char* f : {"gamma_sweep.json", "gamma_sweep.csv", "gamma_mae_v.png", "gamma_psnr_v.png", "gamma_ssim_v.png"}) {
      CHECK(fs::exists(out.path() / f));
    }
  }
}

TEST_SUITE("report") {
  TEST_CASE("four runs make a four by five table") {
    std::vector<std::pair<std::string, json>> runs;
    for (const char* v : {"baseline", "vpg", "hcg", "full"}) runs.emplace_back(v, fake_report(0.1, "d", "c"));
    const ComparisonTable t = merge_reports(runs);
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows[3].label == "full");
    CHECK_FALSE(t.dataset_mismatch);
    CHECK_FALSE(t.config_mismatch);
    const std::string csv = comparison_csv(t);
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "run,mae,psnr,ssim,vde,vdc");
    int lines = 0;
    for (std::string l; std::getline(in, l);) lines += l.empty() ? 0 : 1;
    CHECK(lines == 4);
  }

  TEST_CASE("a single run gives a single row") {
    const ComparisonTable t = merge_reports({{"only", fake_report(0.2, "d", "c")}});
    CHECK(t.rows.size() == 1);
    CHECK(comparison_text(t).find("only") != std::string::npos);
  }

  TEST_CASE("mismatched runs are flagged") {
    const ComparisonTable t = merge_reports({{"a", fake_report(0.2, "d1", "c")}, {"b", fake_report(0.3, "d2", "c")}});
    CHECK(t.dataset_mismatch);
    CHECK_FALSE(t.config_mismatch);
    CHECK_FALSE(t.warnings.empty());
    CHECK(comparison_text(t).find("different datasets") != std::string::npos);
    const ComparisonTable u = merge_reports({{"a", fake_report(0.2, "d", "c1")}, {"b", fake_report(0.3, "d", "c2")}});
    CHECK(u.config_mismatch);
  }

  TEST_CASE("malformed input") {
    CHECK_THROWS_AS(merge_reports({}), Error);
    CHECK_THROWS_AS(merge_reports({{"x", json{{"aggregate", json::object()}}}}), Error);
    testing::TempDir dir("report_missing");
    CHECK_THROWS_AS(merge_run_dirs({dir.path()}), Error);
  }

  TEST_CASE("comparison files are written") {
    testing::TempDir dir("report_files");
    write_comparison(merge_reports({{"a", fake_report(0.2, "d", "c")}, {"b", fake_report(0.3, "d", "c")}}), dir.path());
    for (const char* f : {"report.txt", "report.csv", "report.json", "report_mae.png", "report_vdc.png"}) {
      CHECK(fs::exists(dir.path() / f));
    }
  }
}
