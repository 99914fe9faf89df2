#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "projgan/losses.hpp"
#include "projgan/networks.hpp"
#include "projgan/phantom.hpp"

namespace projgan {

struct OptimizerSettings {
  std::string name = "adam";  // "adam" | "rmsprop"
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double rms_alpha = 0.99;
  double eps = 1e-8;
};

struct PhantomSection {
  PhantomConfig generator;
  DatasetCounts counts;
  uint64_t master_seed = 2024;
};

struct VsegStage {
  int epochs = 30;
  int batch_size = 1;
  OptimizerSettings optimizer{"rmsprop", 1e-5};
  SegmenterSpec model;
  int crop = 48;  // 0 disables random cropping
  bool flip = true;
};

struct HcgStage {
  int epochs = 40;
  int batch_size = 1;
  OptimizerSettings optimizer{"adam", 2e-4};
  GeneratorSpec generator{.dims = 2};
  DiscriminatorSpec discriminator{.dims = 2, .conditional = true};
  double lambda_l1 = 100.0;
  bool flip = true;
  // Start the squashed output at the mean training target instead of 0.5.
  bool output_prior_from_data = true;
};

struct TransproStage {
  int epochs = 50;
  int batch_size = 1;
  OptimizerSettings generator_optimizer{"adam", 2e-4};
  OptimizerSettings discriminator_optimizer{"adam", 2e-4};
  GeneratorSpec generator;
  DiscriminatorSpec d3d;
  DiscriminatorSpec d2d{.dims = 2};
  int validation_every = 1;
  bool vpg_on_probabilities = false;
  bool output_prior_from_data = true;
};

struct MetricsSection {
  double gamma = 0.1;
  int64_t patch = 16;
};

struct AblationSection {
  std::vector<std::string> variants{"baseline", "vpg", "hcg", "full"};
};

struct ExperimentConfig {
  std::string name = "run";
  std::filesystem::path dataset = "dataset";
  std::filesystem::path output_root = "runs";
  uint64_t seed = 0;
  LossWeights weights;
  PhantomSection phantom;
  VsegStage vseg;
  HcgStage hcg;
  TransproStage transpro;
  MetricsSection metrics;
  AblationSection ablation;

  std::filesystem::path run_dir() const { return output_root / name; }
  void validate() const;
};

void to_json(nlohmann::json& j, const OptimizerSettings& o);
void from_json(const nlohmann::json& j, OptimizerSettings& o);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Strict parse: unknown keys anywhere are errors; absent keys keep defaults.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_hash(const ExperimentConfig& c);

}  // namespace projgan
