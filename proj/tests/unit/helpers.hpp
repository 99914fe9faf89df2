#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "projgan/volume.hpp"

namespace testing {

inline projgan::Volume random_volume(projgan::Shape3 s, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(static_cast<size_t>(s.numel()));
  for (auto& x : v) x = u(rng);
  return projgan::Volume(s, std::move(v));
}

inline projgan::ProjectionMap random_map(projgan::Shape2 s, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(static_cast<size_t>(s.numel()));
  for (auto& x : v) x = u(rng);
  return projgan::ProjectionMap(s, std::move(v));
}

inline projgan::VesselMask random_mask(projgan::Shape2 s, std::mt19937_64& rng, double p = 0.3,
                                       projgan::MaskSource src = projgan::MaskSource::AnnotatedGroundTruth) {
  std::bernoulli_distribution b(p);
  std::vector<uint8_t> v(static_cast<size_t>(s.numel()));
  for (auto& x : v) x = b(rng) ? 1 : 0;
  return projgan::VesselMask(s, std::move(v), src);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("projgan_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
