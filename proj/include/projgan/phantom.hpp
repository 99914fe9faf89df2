#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "projgan/volume.hpp"

namespace projgan {

struct PhantomConfig {
  Shape3 shape{64, 64, 32};
  int n_trees = 4;
  double branch_prob = 0.04;         // per walk step
  double radius_start = 1.4;         // voxels
  double radius_decay = 0.75;        // per branch generation
  double min_radius = 0.8;           // branches thinner than this are not spawned
  double turn_sigma = 0.2;           // std of the heading change per step, radians
  double depth_sigma = 0.15;         // std of the depth change per step, voxels
  std::array<double, 2> depth_band{0.35, 0.65};  // fraction of D the centerlines stay within
  std::array<double, 2> vessel_intensity_range{0.6, 1.0};
  double speckle_level = 0.02;
  double shadow_strength = 0.5;
  std::array<double, 2> target_density_band{0.05, 0.35};
  int max_retries = 32;

  void validate() const;
};

void to_json(nlohmann::json& j, const PhantomConfig& c);
// Strict: unknown keys are rejected, missing keys keep their defaults.
void from_json(const nlohmann::json& j, PhantomConfig& c);

struct CenterlineNode {
  double l = 0.0;
  double w = 0.0;
  double d = 0.0;
  double radius = 0.0;
  friend bool operator==(const CenterlineNode&, const CenterlineNode&) = default;
};

struct Centerline {
  std::vector<CenterlineNode> nodes;
  int generation = 0;
  friend bool operator==(const Centerline&, const Centerline&) = default;
};

struct VoxelGrid {
  Shape3 shape{};
  std::vector<uint8_t> data;

  VoxelGrid() = default;
  explicit VoxelGrid(Shape3 s) : shape(s), data(static_cast<size_t>(s.numel()), 0) {}
  uint8_t& at(int64_t l, int64_t w, int64_t d) { return data[static_cast<size_t>((l * shape.W + w) * shape.D + d)]; }
  uint8_t at(int64_t l, int64_t w, int64_t d) const { return data[static_cast<size_t>((l * shape.W + w) * shape.D + d)]; }
  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;
};

struct PhantomSample {
  Volume oct;
  Volume octa;
  VesselMask vessel_mask_2d;  // source = annotated ground truth
  VoxelGrid vessel_volume_3d;
  uint64_t seed = 0;
};

std::vector<Centerline> grow_vessel_tree(uint64_t seed, const PhantomConfig& config);

// Voxel is set iff its center lies within the interpolated radius of any
// centerline segment.
VoxelGrid rasterize_vessels(const std::vector<Centerline>& trees, Shape3 shape);

Volume synth_octa_volume(const VoxelGrid& vessels, uint64_t seed, const PhantomConfig& config);
Volume synth_oct_volume(const VoxelGrid& vessels, uint64_t seed, const PhantomConfig& config);

// Layered background intensity at a depth index, before shadowing and speckle.
float oct_layer_profile(int64_t d, int64_t depth);

VesselMask max_project_mask(const VoxelGrid& vessels);

PhantomSample generate_sample(uint64_t seed, const PhantomConfig& config);

struct DatasetCounts {
  int n_train = 8;
  int n_val = 2;
  int n_test = 4;
};

// Writes dataset/{train,val,test}/sample_%04d/... plus manifest.json and
// returns the manifest. Samples whose mask density falls outside the target
// band are regenerated from a new derived seed.
nlohmann::json generate_dataset(const DatasetCounts& counts, uint64_t master_seed,
                                const PhantomConfig& config, const std::filesystem::path& root);

}  // namespace projgan
