#include "projgan/config.hpp"
#include "projgan/metrics.hpp"

#include "projgan/error.hpp"
#include "projgan/json_util.hpp"

namespace projgan {
using nlohmann::json;

namespace {

void require_epochs(int epochs, int batch, const char* stage) {
  if (epochs < 1) throw Error(ErrorKind::Config, std::string(stage) + ".epochs must be >= 1");
  if (batch < 1) throw Error(ErrorKind::Config, std::string(stage) + ".batch_size must be >= 1");
}

void validate_optimizer(const OptimizerSettings& o, const char* where) {
  if (o.name != "adam" && o.name != "rmsprop") {
    throw Error(ErrorKind::Config, std::string(where) + ": optimizer must be 'adam' or 'rmsprop'");
  }
  if (!(o.lr > 0.0)) throw Error(ErrorKind::Config, std::string(where) + ": lr must be positive");
}

}  // namespace

void to_json(json& j, const OptimizerSettings& o) {
  j = json{{"name", o.name}, {"lr", o.lr},           {"beta1", o.beta1},
           {"beta2", o.beta2}, {"rms_alpha", o.rms_alpha}, {"eps", o.eps}};
}

void from_json(const json& j, OptimizerSettings& o) {
  StrictObject s(j, "optimizer");
  s.get("name", o.name);
  s.get("lr", o.lr);
  s.get("beta1", o.beta1);
  s.get("beta2", o.beta2);
  s.get("rms_alpha", o.rms_alpha);
  s.get("eps", o.eps);
  s.finish();
}

void ExperimentConfig::validate() const {
  if (name.empty()) throw Error(ErrorKind::Config, "name must not be empty");
  weights.validate();
  phantom.generator.validate();
  require_epochs(vseg.epochs, vseg.batch_size, "vseg");
  require_epochs(hcg.epochs, hcg.batch_size, "hcg");
  require_epochs(transpro.epochs, transpro.batch_size, "transpro");
  validate_optimizer(vseg.optimizer, "vseg");
  validate_optimizer(hcg.optimizer, "hcg");
  validate_optimizer(transpro.generator_optimizer, "transpro.generator_optimizer");
  validate_optimizer(transpro.discriminator_optimizer, "transpro.discriminator_optimizer");
  if (vseg.crop < 0) throw Error(ErrorKind::Config, "vseg.crop must be >= 0");
  if (transpro.validation_every < 1) throw Error(ErrorKind::Config, "transpro.validation_every must be >= 1");
  if (transpro.generator.dims != 3 || transpro.d3d.dims != 3 || transpro.d2d.dims != 2) {
    throw Error(ErrorKind::Config, "transpro needs a 3D generator, a 3D and a 2D discriminator");
  }
  if (hcg.generator.dims != 2 || hcg.discriminator.dims != 2) {
    throw Error(ErrorKind::Config, "hcg networks must be 2D");
  }
  WeightingConfig{metrics.gamma}.validate();
  if (metrics.patch < 1) throw Error(ErrorKind::Config, "metrics.patch must be >= 1");
  for (const auto& v : ablation.variants) {
    if (v != "baseline" && v != "vpg" && v != "hcg" && v != "full") {
      throw Error(ErrorKind::Config, "unknown ablation variant '" + v + "'");
    }
  }
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{
      {"name", c.name},
      {"dataset", c.dataset.string()},
      {"output_root", c.output_root.string()},
      {"seed", c.seed},
      {"weights", c.weights},
      {"phantom",
       {{"generator", c.phantom.generator},
        {"n_train", c.phantom.counts.n_train},
        {"n_val", c.phantom.counts.n_val},
        {"n_test", c.phantom.counts.n_test},
        {"master_seed", c.phantom.master_seed}}},
      {"vseg",
       {{"epochs", c.vseg.epochs},
        {"batch_size", c.vseg.batch_size},
        {"optimizer", c.vseg.optimizer},
        {"model", c.vseg.model},
        {"crop", c.vseg.crop},
        {"flip", c.vseg.flip}}},
      {"hcg",
       {{"epochs", c.hcg.epochs},
        {"batch_size", c.hcg.batch_size},
        {"optimizer", c.hcg.optimizer},
        {"generator", c.hcg.generator},
        {"discriminator", c.hcg.discriminator},
        {"lambda_l1", c.hcg.lambda_l1},
        {"flip", c.hcg.flip},
        {"output_prior_from_data", c.hcg.output_prior_from_data}}},
      {"transpro",
       {{"epochs", c.transpro.epochs},
        {"batch_size", c.transpro.batch_size},
        {"generator_optimizer", c.transpro.generator_optimizer},
        {"discriminator_optimizer", c.transpro.discriminator_optimizer},
        {"generator", c.transpro.generator},
        {"d3d", c.transpro.d3d},
        {"d2d", c.transpro.d2d},
        {"validation_every", c.transpro.validation_every},
        {"vpg_on_probabilities", c.transpro.vpg_on_probabilities},
        {"output_prior_from_data", c.transpro.output_prior_from_data}}},
      {"metrics", {{"gamma", c.metrics.gamma}, {"patch", c.metrics.patch}}},
      {"ablation", {{"variants", c.ablation.variants}}},
  };
}

void from_json(const json& j, ExperimentConfig& c) {
  StrictObject root(j, "config");
  std::string dataset = c.dataset.string();
  std::string output_root = c.output_root.string();
  root.get("name", c.name);
  root.get("dataset", dataset);
  root.get("output_root", output_root);
  root.get("seed", c.seed);
  root.get("weights", c.weights);
  c.dataset = dataset;
  c.output_root = output_root;

  json section;
  root.get("phantom", section);
  if (!section.is_null()) {
    StrictObject s(section, "phantom");
    s.get("generator", c.phantom.generator);
    s.get("n_train", c.phantom.counts.n_train);
    s.get("n_val", c.phantom.counts.n_val);
    s.get("n_test", c.phantom.counts.n_test);
    s.get("master_seed", c.phantom.master_seed);
    s.finish();
  }
  section = nullptr;
  root.get("vseg", section);
  if (!section.is_null()) {
    StrictObject s(section, "vseg");
    s.get("epochs", c.vseg.epochs);
    s.get("batch_size", c.vseg.batch_size);
    s.get("optimizer", c.vseg.optimizer);
    s.get("model", c.vseg.model);
    s.get("crop", c.vseg.crop);
    s.get("flip", c.vseg.flip);
    s.finish();
  }
  section = nullptr;
  root.get("hcg", section);
  if (!section.is_null()) {
    StrictObject s(section, "hcg");
    s.get("epochs", c.hcg.epochs);
    s.get("batch_size", c.hcg.batch_size);
    s.get("optimizer", c.hcg.optimizer);
    s.get("generator", c.hcg.generator);
    s.get("discriminator", c.hcg.discriminator);
    s.get("lambda_l1", c.hcg.lambda_l1);
    s.get("flip", c.hcg.flip);
    s.get("output_prior_from_data", c.hcg.output_prior_from_data);
    s.finish();
  }
  section = nullptr;
  root.get("transpro", section);
  if (!section.is_null()) {
    StrictObject s(section, "transpro");
    s.get("epochs", c.transpro.epochs);
    s.get("batch_size", c.transpro.batch_size);
    s.get("generator_optimizer", c.transpro.generator_optimizer);
    s.get("discriminator_optimizer", c.transpro.discriminator_optimizer);
    s.get("generator", c.transpro.generator);
    s.get("d3d", c.transpro.d3d);
    s.get("d2d", c.transpro.d2d);
    s.get("validation_every", c.transpro.validation_every);
    s.get("vpg_on_probabilities", c.transpro.vpg_on_probabilities);
    s.get("output_prior_from_data", c.transpro.output_prior_from_data);
    s.finish();
  }
  section = nullptr;
  root.get("metrics", section);
  if (!section.is_null()) {
    StrictObject s(section, "metrics");
    s.get("gamma", c.metrics.gamma);
    s.get("patch", c.metrics.patch);
    s.finish();
  }
  section = nullptr;
  root.get("ablation", section);
  if (!section.is_null()) {
    StrictObject s(section, "ablation");
    s.get("variants", c.ablation.variants);
    s.finish();
  }
  root.finish();
  c.validate();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return read_json_file(path).get<ExperimentConfig>();
}

// Where a run reads and writes is not part of its identity; datasets are
// identified by their own manifest hash.
std::string config_hash(const ExperimentConfig& c) {
  json j = c;
  j.erase("output_root");
  j.erase("dataset");
  return json_hash(j);
}

}  // namespace projgan
