#include "projgan/volume.hpp"

#include <cmath>
#include <string>

#include "projgan/error.hpp"

namespace projgan {
namespace {

void check_unit_range(std::span<const float> values, const char* what) {
  for (size_t i = 0; i < values.size(); ++i) {
    const float x = values[i];
    if (!std::isfinite(x) || x < 0.0f || x > 1.0f) {
      throw Error(ErrorKind::Range, std::string(what) + " value " + std::to_string(x) +
                                        " at element " + std::to_string(i) +
                                        " is outside [0, 1]");
    }
  }
}

}  // namespace

Volume::Volume(Shape3 shape, float fill) : shape_(shape) {
  if (shape.L < 1 || shape.W < 1 || shape.D < 1) {
    throw Error(ErrorKind::Shape, "volume dimensions must be positive");
  }
  if (fill < 0.0f || fill > 1.0f) throw Error(ErrorKind::Range, "fill value outside [0, 1]");
  data_.assign(static_cast<size_t>(shape.numel()), fill);
}

Volume::Volume(Shape3 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (shape.L < 1 || shape.W < 1 || shape.D < 1) {
    throw Error(ErrorKind::Shape, "volume dimensions must be positive");
  }
  if (static_cast<int64_t>(data_.size()) != shape.numel()) {
    throw Error(ErrorKind::Shape, "volume payload holds " + std::to_string(data_.size()) +
                                      " values, shape needs " + std::to_string(shape.numel()));
  }
  check_range();
}

void Volume::check_range() const { check_unit_range(data_, "volume"); }

ProjectionMap::ProjectionMap(Shape2 shape, float fill) : shape_(shape) {
  if (shape.L < 1 || shape.W < 1) throw Error(ErrorKind::Shape, "map dimensions must be positive");
  if (fill < 0.0f || fill > 1.0f) throw Error(ErrorKind::Range, "fill value outside [0, 1]");
  data_.assign(static_cast<size_t>(shape.numel()), fill);
}

ProjectionMap::ProjectionMap(Shape2 shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
  if (shape.L < 1 || shape.W < 1) throw Error(ErrorKind::Shape, "map dimensions must be positive");
  if (static_cast<int64_t>(data_.size()) != shape.numel()) {
    throw Error(ErrorKind::Shape, "map payload holds " + std::to_string(data_.size()) +
                                      " values, shape needs " + std::to_string(shape.numel()));
  }
  check_range();
}

void ProjectionMap::check_range() const { check_unit_range(data_, "projection map"); }

std::string_view to_string(MaskSource source) {
  switch (source) {
    case MaskSource::AnnotatedGroundTruth: return "annotated-ground-truth";
    case MaskSource::MeanThresholdDerived: return "mean-threshold-derived";
  }
  return "unknown";
}

VesselMask::VesselMask(Shape2 shape, MaskSource source) : shape_(shape), source_(source) {
  if (shape.L < 1 || shape.W < 1) throw Error(ErrorKind::Shape, "mask dimensions must be positive");
  data_.assign(static_cast<size_t>(shape.numel()), 0);
}

VesselMask::VesselMask(Shape2 shape, std::vector<uint8_t> data, MaskSource source)
    : shape_(shape), data_(std::move(data)), source_(source) {
  if (shape.L < 1 || shape.W < 1) throw Error(ErrorKind::Shape, "mask dimensions must be positive");
  if (static_cast<int64_t>(data_.size()) != shape.numel()) {
    throw Error(ErrorKind::Shape, "mask payload size does not match its shape");
  }
  for (uint8_t v : data_) {
    if (v > 1) throw Error(ErrorKind::Range, "mask elements must be 0 or 1");
  }
}

ProjectionMap project_mean(const Volume& v) {
  const Shape3& s = v.shape();
  std::vector<float> out(static_cast<size_t>(s.L * s.W));
  const auto data = v.data();
  for (int64_t l = 0; l < s.L; ++l) {
    for (int64_t w = 0; w < s.W; ++w) {
      const float* column = data.data() + v.index(l, w, 0);
      double sum = 0.0;
      for (int64_t d = 0; d < s.D; ++d) sum += column[d];
      // Rounding the mean of [0,1] values can never leave [0,1].
      out[static_cast<size_t>(l * s.W + w)] = static_cast<float>(sum / static_cast<double>(s.D));
    }
  }
  return ProjectionMap(Shape2{s.L, s.W}, std::move(out));
}

}  // namespace projgan
