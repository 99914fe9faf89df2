#pragma once

#include <filesystem>

#include "projgan/volume.hpp"

namespace projgan {

// Raw tensor files: little-endian f32 payload in C-order next to a JSON
// sidecar with the same stem (oct.raw + oct.json).
std::filesystem::path sidecar_path(const std::filesystem::path& raw_path);

void save_volume(const Volume& v, const std::filesystem::path& raw_path);
Volume load_volume(const std::filesystem::path& raw_path);

void save_projection_map(const ProjectionMap& m, const std::filesystem::path& raw_path);
ProjectionMap load_projection_map(const std::filesystem::path& raw_path);

// 8-bit grayscale PNG, pixel = round_half_up(255 * value).
void save_projection_image(const ProjectionMap& m, const std::filesystem::path& png_path);
uint8_t intensity_to_byte(float value);

// Masks are stored as 0/255 PNGs.
void save_mask_image(const VesselMask& mask, const std::filesystem::path& png_path);
VesselMask load_mask_image(const std::filesystem::path& png_path, MaskSource source);

struct GrayImage {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<uint8_t> pixels;
};

void write_png(const GrayImage& image, const std::filesystem::path& path);
GrayImage read_png(const std::filesystem::path& path);

// RGB variant, used for plots.
struct RgbImage {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<uint8_t> pixels;  // rows * cols * 3
};

void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace projgan
