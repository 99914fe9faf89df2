#include "projgan/checkpoint.hpp"

#include "projgan/error.hpp"
#include "projgan/json_util.hpp"

namespace projgan {
namespace fs = std::filesystem;
using nlohmann::json;

void to_json(json& j, const CheckpointInfo& c) {
  j = json{{"role", c.role},
           {"spec", c.spec},
           {"init_seed", c.init_seed},
           {"parameter_count", c.parameter_count},
           {"epoch", c.epoch},
           {"selection_metric", c.selection_metric},
           {"selection_value", stable_number(c.selection_value)},
           {"parameter_digest", c.parameter_digest},
           {"config_hash", c.config_hash},
           {"extra", c.extra}};
}

void from_json(const json& j, CheckpointInfo& c) {
  try {
    j.at("role").get_to(c.role);
    c.spec = j.at("spec");
    j.at("init_seed").get_to(c.init_seed);
    j.at("parameter_count").get_to(c.parameter_count);
    j.at("epoch").get_to(c.epoch);
    j.at("selection_metric").get_to(c.selection_metric);
    j.at("selection_value").get_to(c.selection_value);
    j.at("parameter_digest").get_to(c.parameter_digest);
    j.at("config_hash").get_to(c.config_hash);
    c.extra = j.value("extra", json::object());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("checkpoint manifest: ") + e.what());
  }
}

void save_checkpoint(const std::shared_ptr<torch::nn::Module>& module, CheckpointInfo info, const fs::path& dir) {
  fs::create_directories(dir);
  info.parameter_count = parameter_count(*module);
  info.parameter_digest = parameter_digest(*module);
  torch::serialize::OutputArchive archive;
  module->save(archive);
  archive.save_to((dir / "model.pt").string());
  write_json_file(json(info), dir / "manifest.json");
}

CheckpointInfo read_checkpoint_info(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json") || !fs::exists(dir / "model.pt")) {
    throw Error(ErrorKind::Io, "no checkpoint at " + dir.string());
  }
  return read_json_file(dir / "manifest.json").get<CheckpointInfo>();
}

ModelLoadRegistry& ModelLoadRegistry::instance() {
  static ModelLoadRegistry registry;
  return registry;
}

void ModelLoadRegistry::record(const std::string& role, const fs::path& dir) {
  std::lock_guard lock(mutex_);
  roles_.push_back(role + ":" + dir.string());
}

size_t ModelLoadRegistry::count() const {
  std::lock_guard lock(mutex_);
  return roles_.size();
}

std::vector<std::string> ModelLoadRegistry::roles() const {
  std::lock_guard lock(mutex_);
  return roles_;
}

void ModelLoadRegistry::reset() {
  std::lock_guard lock(mutex_);
  roles_.clear();
}

UNet load_unet(const fs::path& dir, CheckpointInfo* info_out) {
  CheckpointInfo info = read_checkpoint_info(dir);
  GeneratorSpec spec;
  if (info.role == "vseg") {
    spec = info.spec.get<SegmenterSpec>().as_unet();
  } else {
    spec = info.spec.get<GeneratorSpec>();
  }
  UNet net(spec);
  torch::serialize::InputArchive archive;
  try {
    archive.load_from((dir / "model.pt").string());
    net->load(archive);
  } catch (const c10::Error& e) {
    throw Error(ErrorKind::Format, "cannot load " + (dir / "model.pt").string() + ": " + e.what_without_backtrace());
  }
  if (parameter_digest(*net) != info.parameter_digest) {
    throw Error(ErrorKind::Format, "parameter digest mismatch for " + dir.string());
  }
  net->eval();
  ModelLoadRegistry::instance().record(info.role, dir);
  if (info_out) *info_out = info;
  return net;
}

FrozenNetwork::FrozenNetwork(UNet net, CheckpointInfo info) : net_(std::move(net)), info_(std::move(info)) {
  set_trainable(*net_, false);
  net_->eval();
}

torch::Tensor FrozenNetwork::forward(const torch::Tensor& x) const { return net_.ptr()->forward(x); }

FrozenNetwork load_frozen(const fs::path& dir, const std::string& expected_role) {
  CheckpointInfo info;
  UNet net = load_unet(dir, &info);
  if (info.role != expected_role) {
    throw Error(ErrorKind::Format, dir.string() + " holds a '" + info.role + "' checkpoint, expected '" +
                                       expected_role + "'");
  }
  return FrozenNetwork(std::move(net), std::move(info));
}

}  // namespace projgan
