#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "projgan/config.hpp"
#include "projgan/dataset.hpp"
#include "projgan/error.hpp"
#include "projgan/evaluation.hpp"
#include "projgan/json_util.hpp"
#include "projgan/phantom.hpp"
#include "projgan/trainer.hpp"
#include "projgan/volume_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace projgan;

namespace {

struct Common {
  std::string config;
  std::string output_root;
  std::string dataset;
  std::string name;
  std::optional<uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config,-c", c.config, "experiment config (JSON)");
  cmd->add_option("--output-root", c.output_root, "directory that holds run directories");
  cmd->add_option("--dataset", c.dataset, "dataset root");
  cmd->add_option("--name", c.name, "run name");
  cmd->add_option("--seed", c.seed, "override the experiment seed");
  cmd->add_flag("--quiet,-q", c.quiet, "no per-epoch progress on stderr");
}

// Precedence: flag, then config file, then PROJGAN_OUTPUT_ROOT, then the built-in default.
ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  bool root_in_file = false;
  if (!c.config.empty()) {
    const json raw = read_json_file(c.config);
    root_in_file = raw.is_object() && raw.contains("output_root");
    cfg = raw.get<ExperimentConfig>();
  }
  if (!root_in_file) {
    if (const char* env = std::getenv("PROJGAN_OUTPUT_ROOT"); env && *env) cfg.output_root = env;
  }
  if (!c.output_root.empty()) cfg.output_root = c.output_root;
  if (!c.dataset.empty()) cfg.dataset = c.dataset;
  if (!c.name.empty()) cfg.name = c.name;
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const json& extra = json::object()) {
  fs::create_directories(dir);
  json j{{"command", command}, {"config", cfg}, {"config_hash", config_hash(cfg)}};
  if (!extra.empty()) j["details"] = extra;
  write_json_file(j, dir / "run_manifest.json");
}

fs::path default_checkpoint(const ExperimentConfig& cfg, const std::string& given, const char* stage) {
  return given.empty() ? cfg.run_dir() / "checkpoints" / (std::string(stage) + "_best") : fs::path(given);
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage:
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 3;
    case ErrorKind::Shape:
    case ErrorKind::Range:
    case ErrorKind::Source:
      return 4;
    case ErrorKind::EmptySet:
    case ErrorKind::Infeasible:
      return 5;
    case ErrorKind::Numeric:
      return 6;
  }
  return 1;
}

int fail(const std::string& command, const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"command", command}, {"message", message}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection-guided OCT to OCTA volume translation on synthetic phantoms"};
  app.require_subcommand(1, 1);

  Common common;
  std::string out, vseg, gpre, checkpoint, pred_dir, input, output, split = "test";
  bool resume = false;
  std::vector<std::string> run_dirs;

  auto* phantom = app.add_subcommand("phantom", "generate a paired phantom dataset");
  add_common(phantom, common);
  phantom->add_option("--out,-o", out, "dataset directory (defaults to the config's dataset)");

  auto* pre_vpg = app.add_subcommand("pretrain-vpg", "pretrain the vessel segmenter on OCTA projections");
  auto* pre_hcg = app.add_subcommand("pretrain-hcg", "pretrain the 2D projection translator");
  for (auto* cmd : {pre_vpg, pre_hcg}) {
    add_common(cmd, common);
    cmd->add_flag("--resume", resume, "continue from the last saved epoch");
  }

  auto* train = app.add_subcommand("train", "adversarial volumetric training with frozen guidance");
  add_common(train, common);
  train->add_option("--vseg", vseg, "segmenter checkpoint (default: <run>/checkpoints/vseg_best)");
  train->add_option("--gpre", gpre, "2D translator checkpoint (default: <run>/checkpoints/gpre_best)");
  train->add_flag("--resume", resume, "continue from the last saved epoch");

  auto* translate_cmd = app.add_subcommand("translate", "translate OCT volumes with a 3D generator");
  translate_cmd->add_option("--checkpoint", checkpoint, "3D generator checkpoint")->required();
  translate_cmd->add_option("--input,-i", input, "single OCT volume (.raw with sidecar)");
  translate_cmd->add_option("--output", output, "output volume path for --input");
  translate_cmd->add_option("--dataset", common.dataset, "dataset root to translate a whole split");
  translate_cmd->add_option("--split", split, "split to translate with --dataset");
  translate_cmd->add_option("--out,-o", out, "output directory for --dataset");

  auto* evaluate = app.add_subcommand("evaluate", "score translated test volumes");
  auto* sweep = app.add_subcommand("sweep-gamma", "vessel-weighted metrics for gamma from 1.0 to 0.1");
  for (auto* cmd : {evaluate, sweep}) {
    add_common(cmd, common);
    cmd->add_option("--checkpoint", checkpoint, "3D generator checkpoint (default: <run>/checkpoints/g3d_best)");
    cmd->add_option("--pred-dir", pred_dir, "directory of predicted volumes laid out like a split");
    cmd->add_option("--out,-o", out, "output directory (default: <run>/report)");
  }

  auto* ablate = app.add_subcommand("ablate", "train and compare the configured ablation variants");
  add_common(ablate, common);
  ablate->add_option("--vseg", vseg, "segmenter checkpoint (pretrained when omitted)");
  ablate->add_option("--gpre", gpre, "2D translator checkpoint (pretrained when omitted)");

  auto* report = app.add_subcommand("report", "merge run reports into one comparison table");
  report->add_option("runs", run_dirs, "run directories, in row order")->required();
  report->add_option("--out,-o", out, "output directory")->required();

  std::string command = "projgan";
  if (argc > 1 && argv[1][0] != '-') command = argv[1];
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(command, std::string(to_string(ErrorKind::Usage)), e.what(), 2);
  }
  command = app.get_subcommands().front()->get_name();

  try {
    const TrainOptions opts{resume, common.quiet};
    if (*phantom) {
      const ExperimentConfig cfg = resolve(common);
      const fs::path root = out.empty() ? cfg.dataset : fs::path(out);
      const json manifest = generate_dataset(cfg.phantom.counts, cfg.phantom.master_seed, cfg.phantom.generator, root);
      std::cout << json{{"dataset", root.string()}, {"dataset_hash", manifest.at("dataset_hash")}}.dump() << "\n";
    } else if (*pre_vpg || *pre_hcg) {
      const ExperimentConfig cfg = resolve(common);
      write_manifest(cfg.run_dir(), command, cfg);
      const StageResult r = *pre_vpg ? pretrain_vseg(cfg, opts) : pretrain_hcg(cfg, opts);
      std::cout << json{{"checkpoint", r.best_checkpoint.string()}, {"best_epoch", r.best_epoch},
                        {"best_validation", r.best_validation}}
                       .dump()
                << "\n";
    } else if (*train) {
      const ExperimentConfig cfg = resolve(common);
      const fs::path v = default_checkpoint(cfg, vseg, "vseg");
      const fs::path g = default_checkpoint(cfg, gpre, "gpre");
      write_manifest(cfg.run_dir(), command, cfg, json{{"vseg", v.string()}, {"gpre", g.string()}});
      const StageResult r = train_transpro(cfg, v, g, opts);
      std::cout << json{{"checkpoint", r.best_checkpoint.string()}, {"best_epoch", r.best_epoch},
                        {"best_validation", r.best_validation}, {"guidance", r.extra}}
                       .dump()
                << "\n";
    } else if (*translate_cmd) {
      const Translator translator(checkpoint);
      if (!input.empty()) {
        if (output.empty()) throw Error(ErrorKind::Usage, "--input requires --output");
        const fs::path dst(output);
        if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
        save_volume(translator(load_volume(input)), dst);
        std::cout << json{{"output", dst.string()}}.dump() << "\n";
      } else {
        if (common.dataset.empty() || out.empty()) {
          throw Error(ErrorKind::Usage, "translate needs --input/--output or --dataset/--out");
        }
        const auto samples = load_split(common.dataset, split);
        for (const auto& s : samples) {
          fs::create_directories(fs::path(out) / s.name);
          save_volume(translator(s.oct), fs::path(out) / s.name / "octa.raw");
        }
        std::cout << json{{"output", out}, {"count", samples.size()}}.dump() << "\n";
      }
    } else if (*evaluate || *sweep) {
      const ExperimentConfig cfg = resolve(common);
      const fs::path dir = out.empty() ? cfg.run_dir() / "report" : fs::path(out);
      if (*evaluate) {
        const MetricsReport r = pred_dir.empty()
                                    ? evaluate_checkpoint(default_checkpoint(cfg, checkpoint, "g3d"), cfg.dataset,
                                                          eval_context(cfg))
                                    : evaluate_predictions(pred_dir, cfg.dataset, eval_context(cfg));
        write_metrics_report(r, dir);
        std::cout << report_json(r).at("aggregate").dump() << "\n";
      } else {
        const auto gt = load_split(cfg.dataset, "test");
        std::vector<Volume> preds;
        if (pred_dir.empty()) {
          const Translator translator(default_checkpoint(cfg, checkpoint, "g3d"));
          for (const auto& s : gt) preds.push_back(translator(s.oct));
        } else {
          std::vector<std::string> names;
          for (const auto& s : gt) names.push_back(s.name);
          preds = load_predictions(pred_dir, names);
        }
        write_gamma_sweep(sweep_gamma_predictions(gt, preds), dir);
        std::cout << json{{"output", dir.string()}}.dump() << "\n";
      }
      write_manifest(dir, command, cfg);
    } else if (*ablate) {
      const ExperimentConfig cfg = resolve(common);
      write_manifest(cfg.run_dir(), command, cfg);
      const AblationResult r = run_ablation(cfg, vseg, gpre, opts);
      std::cout << comparison_text(r.table);
    } else if (*report) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      const ComparisonTable t = merge_run_dirs(dirs);
      write_comparison(t, out);
      std::cout << comparison_text(t);
    }
  } catch (const Error& e) {
    return fail(command, std::string(to_string(e.kind())), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return fail(command, "internal", e.what(), 1);
  }
  return 0;
}
