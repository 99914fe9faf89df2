#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "projgan/checkpoint.hpp"
#include "projgan/config.hpp"
#include "projgan/volume.hpp"

namespace projgan {

// One line of a stage log (logs/<stage>_log.jsonl).
struct EpochRecord {
  int epoch = 0;
  nlohmann::json losses = nlohmann::json::object();
  double validation = 0.0;  // stage-specific selection metric value
  double wall_clock_s = 0.0;
  std::string seed_digest;
  std::string config_hash;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const EpochRecord& r);
void from_json(const nlohmann::json& j, EpochRecord& r);

struct StageResult {
  std::filesystem::path best_checkpoint;
  int best_epoch = 0;
  double best_validation = 0.0;
  std::vector<EpochRecord> log;
  nlohmann::json extra = nlohmann::json::object();
};

struct TrainOptions {
  bool resume = false;
  bool quiet = false;
  int stop_after_epoch = 0;  // simulates an interrupted run; 0 runs to the end
};

// Stage layout under config.run_dir():
//   checkpoints/<stage>_best, checkpoints/<stage>_last, logs/<stage>_log.jsonl
// with stage in {vseg, gpre, train}. The adversarial stage writes
// logs/train_log.jsonl and checkpoints/g3d_best.

// Segmenter on OCTA projections -> annotated masks; BCE with logits,
// selection by maximum validation Dice.
StageResult pretrain_vseg(const ExperimentConfig& config, const TrainOptions& options = {});

// 2D conditional GAN, OCT projection -> OCTA projection; selection by
// minimum validation MAE.
StageResult pretrain_hcg(const ExperimentConfig& config, const TrainOptions& options = {});

// Adversarial volumetric training with projection, contextual and vessel
// guidance terms; selection by minimum per-B-scan validation MAE.
// extra holds the guidance digests before and after training.
StageResult train_transpro(const ExperimentConfig& config, const std::filesystem::path& vseg_checkpoint,
                           const std::filesystem::path& gpre_checkpoint, const TrainOptions& options = {});

// Inference with the 3D generator alone.
Volume translate(const std::filesystem::path& g3d_checkpoint, const Volume& oct);

class Translator {
 public:
  explicit Translator(const std::filesystem::path& g3d_checkpoint);
  Volume operator()(const Volume& oct) const;
  const CheckpointInfo& info() const { return info_; }

 private:
  UNet net_{nullptr};
  CheckpointInfo info_;
};

std::vector<EpochRecord> read_log(const std::filesystem::path& path);

// The loss weights each ablation variant trains with.
LossWeights ablation_weights(const std::string& variant, const LossWeights& full);

}  // namespace projgan
