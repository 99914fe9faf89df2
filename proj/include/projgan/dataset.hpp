#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "projgan/volume.hpp"

namespace projgan {

struct DatasetSample {
  std::string name;
  Volume oct;
  Volume octa;
  VesselMask mask;  // annotated ground truth
};

nlohmann::json load_manifest(const std::filesystem::path& root);
std::vector<DatasetSample> load_split(const std::filesystem::path& root, std::string_view split);

// Reads octa.raw from each sample directory of a split laid out like a
// dataset split (a dataset split itself qualifies).
std::vector<Volume> load_predictions(const std::filesystem::path& split_dir,
                                     const std::vector<std::string>& names);

// [1, 1, L, W, D] / [1, 1, L, W] float32 tensors.
torch::Tensor to_tensor(const Volume& v);
torch::Tensor to_tensor(const ProjectionMap& m);
torch::Tensor to_tensor(const VesselMask& m);
// Expects a single-sample tensor; values must already lie in [0, 1].
Volume to_volume(const torch::Tensor& t);
ProjectionMap to_projection_map(const torch::Tensor& t);

}  // namespace projgan
