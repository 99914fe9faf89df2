#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace projgan {

// Shape of a volume. L is lateral, W indexes B-scans, D is depth.
// Storage is C-order with L outermost and D innermost.
struct Shape3 {
  int64_t L = 0;
  int64_t W = 0;
  int64_t D = 0;

  int64_t numel() const { return L * W * D; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct Shape2 {
  int64_t L = 0;
  int64_t W = 0;

  int64_t numel() const { return L * W; }
  friend bool operator==(const Shape2&, const Shape2&) = default;
};

// 3D intensity grid with values in [0, 1].
class Volume {
 public:
  Volume() = default;
  explicit Volume(Shape3 shape, float fill = 0.0f);
  // Throws on a size mismatch or out-of-range / non-finite values.
  Volume(Shape3 shape, std::vector<float> data);

  const Shape3& shape() const { return shape_; }
  int64_t numel() const { return shape_.numel(); }

  int64_t index(int64_t l, int64_t w, int64_t d) const {
    return (l * shape_.W + w) * shape_.D + d;
  }
  float& at(int64_t l, int64_t w, int64_t d) { return data_[index(l, w, d)]; }
  float at(int64_t l, int64_t w, int64_t d) const { return data_[index(l, w, d)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  // Re-checks the [0, 1] invariant after in-place edits.
  void check_range() const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Shape3 shape_{};
  std::vector<float> data_;
};

// 2D en-face map (L x W), row-major with L outermost, values in [0, 1].
class ProjectionMap {
 public:
  ProjectionMap() = default;
  explicit ProjectionMap(Shape2 shape, float fill = 0.0f);
  ProjectionMap(Shape2 shape, std::vector<float> data);

  const Shape2& shape() const { return shape_; }
  int64_t numel() const { return shape_.numel(); }

  float& at(int64_t l, int64_t w) { return data_[l * shape_.W + w]; }
  float at(int64_t l, int64_t w) const { return data_[l * shape_.W + w]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  void check_range() const;

  friend bool operator==(const ProjectionMap&, const ProjectionMap&) = default;

 private:
  Shape2 shape_{};
  std::vector<float> data_;
};

enum class MaskSource { AnnotatedGroundTruth, MeanThresholdDerived };

std::string_view to_string(MaskSource source);

// Binary L x W vessel mask. The source tag decides which metrics accept it.
class VesselMask {
 public:
  VesselMask() = default;
  VesselMask(Shape2 shape, MaskSource source);
  VesselMask(Shape2 shape, std::vector<uint8_t> data, MaskSource source);

  const Shape2& shape() const { return shape_; }
  int64_t numel() const { return shape_.numel(); }
  MaskSource source() const { return source_; }

  uint8_t& at(int64_t l, int64_t w) { return data_[l * shape_.W + w]; }
  uint8_t at(int64_t l, int64_t w) const { return data_[l * shape_.W + w]; }

  std::span<uint8_t> data() { return data_; }
  std::span<const uint8_t> data() const { return data_; }

  friend bool operator==(const VesselMask&, const VesselMask&) = default;

 private:
  Shape2 shape_{};
  std::vector<uint8_t> data_;
  MaskSource source_ = MaskSource::AnnotatedGroundTruth;
};

// Mean along depth: out(l, w) = (1/D) * sum_d v(l, w, d).
ProjectionMap project_mean(const Volume& v);

}  // namespace projgan
