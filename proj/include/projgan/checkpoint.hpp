#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "projgan/networks.hpp"

namespace projgan {

// A checkpoint is a directory holding model.pt (parameter blob) and
// manifest.json (spec, init seed, parameter count, epoch, selection metric).
struct CheckpointInfo {
  std::string role;  // "vseg", "gpre" or "g3d"
  nlohmann::json spec;
  uint64_t init_seed = 0;
  int64_t parameter_count = 0;
  int epoch = 0;
  std::string selection_metric;
  double selection_value = 0.0;
  std::string parameter_digest;
  std::string config_hash;
  nlohmann::json extra = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const CheckpointInfo& c);
void from_json(const nlohmann::json& j, CheckpointInfo& c);

void save_checkpoint(const std::shared_ptr<torch::nn::Module>& module, CheckpointInfo info,
                     const std::filesystem::path& dir);
CheckpointInfo read_checkpoint_info(const std::filesystem::path& dir);

// Process-wide record of every model loaded from disk.
class ModelLoadRegistry {
 public:
  static ModelLoadRegistry& instance();
  void record(const std::string& role, const std::filesystem::path& dir);
  size_t count() const;
  std::vector<std::string> roles() const;
  void reset();

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> roles_;
};

// Loads a UNet-family checkpoint (g3d, gpre, vseg) and rebuilds it from the
// stored spec. Throws if the stored digest does not match the blob.
UNet load_unet(const std::filesystem::path& dir, CheckpointInfo* info = nullptr);

// Guidance network with parameters locked for the rest of the process.
class FrozenNetwork {
 public:
  FrozenNetwork() = default;
  FrozenNetwork(UNet net, CheckpointInfo info);

  torch::Tensor forward(const torch::Tensor& x) const;
  bool read_only() const { return true; }
  const CheckpointInfo& info() const { return info_; }
  std::string digest() const { return parameter_digest(*net_); }
  const UNet& net() const { return net_; }

 private:
  UNet net_{nullptr};
  CheckpointInfo info_;
};

FrozenNetwork load_frozen(const std::filesystem::path& dir, const std::string& expected_role);

}  // namespace projgan
