#include "projgan/volume_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "projgan/error.hpp"

namespace projgan {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<float> read_f32le(const fs::path& path, int64_t expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  const auto bytes = static_cast<int64_t>(in.tellg());
  if (bytes != expected * 4) {
    throw Error(ErrorKind::Shape, path.string() + " holds " + std::to_string(bytes / 4) +
                                      " floats (" + std::to_string(bytes) + " bytes), sidecar shape needs " +
                                      std::to_string(expected));
  }
  std::vector<float> values(static_cast<size_t>(expected));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(values.data()), bytes);
  if (!in) throw Error(ErrorKind::Io, "short read from " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : values) {
      v = std::bit_cast<float>(__builtin_bswap32(std::bit_cast<uint32_t>(v)));
    }
  }
  return values;
}

void write_f32le(const fs::path& path, std::span<const float> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    std::vector<uint32_t> swapped(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
      swapped[i] = __builtin_bswap32(std::bit_cast<uint32_t>(values[i]));
    }
    out.write(reinterpret_cast<const char*>(swapped.data()),
              static_cast<std::streamsize>(swapped.size() * 4));
  } else {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * 4));
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

json make_sidecar(std::vector<int64_t> shape, std::vector<std::string> axes) {
  json j;
  j["shape"] = shape;
  j["axes"] = axes;
  j["dtype"] = "f32le";
  j["range"] = {0.0, 1.0};
  return j;
}

// Parses a sidecar and returns its shape, enforcing the expected axis labels.
std::vector<int64_t> read_sidecar(const fs::path& raw_path, const std::vector<std::string>& axes) {
  const fs::path meta = sidecar_path(raw_path);
  std::ifstream in(meta);
  if (!in) throw Error(ErrorKind::Io, "missing sidecar " + meta.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, "unreadable sidecar " + meta.string() + ": " + e.what());
  }
  for (const char* key : {"shape", "axes", "dtype", "range"}) {
    if (!j.contains(key)) throw Error(ErrorKind::Format, meta.string() + " lacks key '" + key + "'");
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "shape" && key != "axes" && key != "dtype" && key != "range") {
      throw Error(ErrorKind::Format, meta.string() + " has unknown key '" + key + "'");
    }
  }
  if (j["dtype"] != "f32le") throw Error(ErrorKind::Format, meta.string() + ": dtype must be f32le");
  if (j["axes"].get<std::vector<std::string>>() != axes) {
    throw Error(ErrorKind::Format, meta.string() + ": unexpected axis labels");
  }
  const auto range = j["range"].get<std::vector<double>>();
  if (range.size() != 2 || range[0] != 0.0 || range[1] != 1.0) {
    throw Error(ErrorKind::Format, meta.string() + ": range must be [0.0, 1.0]");
  }
  auto shape = j["shape"].get<std::vector<int64_t>>();
  if (shape.size() != axes.size()) throw Error(ErrorKind::Format, meta.string() + ": shape rank mismatch");
  for (int64_t s : shape) {
    if (s < 1) throw Error(ErrorKind::Shape, meta.string() + ": non-positive dimension");
  }
  return shape;
}

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, &info); }
};

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_png_rows(const fs::path& path, int64_t rows, int64_t cols, int color_type, int channels,
                    const uint8_t* pixels) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorKind::Io, "cannot write " + path.string());
  PngWriteGuard guard;
  guard.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!guard.png) throw Error(ErrorKind::Io, "png_create_write_struct failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) throw Error(ErrorKind::Io, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(guard.png))) throw Error(ErrorKind::Io, "libpng error writing " + path.string());
  png_init_io(guard.png, file.get());
  png_set_IHDR(guard.png, guard.info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(guard.png, guard.info);
  for (int64_t r = 0; r < rows; ++r) {
    png_write_row(guard.png, const_cast<png_bytep>(pixels + r * cols * channels));
  }
  png_write_end(guard.png, nullptr);
}

}  // namespace

fs::path sidecar_path(const fs::path& raw_path) {
  fs::path p = raw_path;
  p.replace_extension(".json");
  return p;
}

void save_volume(const Volume& v, const fs::path& raw_path) {
  const Shape3& s = v.shape();
  write_f32le(raw_path, v.data());
  write_text(sidecar_path(raw_path), make_sidecar({s.L, s.W, s.D}, {"L", "W", "D"}).dump(2) + "\n");
}

Volume load_volume(const fs::path& raw_path) {
  const auto shape = read_sidecar(raw_path, {"L", "W", "D"});
  const Shape3 s{shape[0], shape[1], shape[2]};
  return Volume(s, read_f32le(raw_path, s.numel()));
}

void save_projection_map(const ProjectionMap& m, const fs::path& raw_path) {
  const Shape2& s = m.shape();
  write_f32le(raw_path, m.data());
  write_text(sidecar_path(raw_path), make_sidecar({s.L, s.W}, {"L", "W"}).dump(2) + "\n");
}

ProjectionMap load_projection_map(const fs::path& raw_path) {
  const auto shape = read_sidecar(raw_path, {"L", "W"});
  const Shape2 s{shape[0], shape[1]};
  return ProjectionMap(s, read_f32le(raw_path, s.numel()));
}

uint8_t intensity_to_byte(float value) {
  const double scaled = std::floor(255.0 * static_cast<double>(value) + 0.5);
  return static_cast<uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

void save_projection_image(const ProjectionMap& m, const fs::path& png_path) {
  GrayImage img{m.shape().L, m.shape().W, {}};
  img.pixels.reserve(static_cast<size_t>(m.numel()));
  for (float v : m.data()) img.pixels.push_back(intensity_to_byte(v));
  write_png(img, png_path);
}

void save_mask_image(const VesselMask& mask, const fs::path& png_path) {
  GrayImage img{mask.shape().L, mask.shape().W, {}};
  img.pixels.reserve(static_cast<size_t>(mask.numel()));
  for (uint8_t v : mask.data()) img.pixels.push_back(v ? 255 : 0);
  write_png(img, png_path);
}

VesselMask load_mask_image(const fs::path& png_path, MaskSource source) {
  GrayImage img = read_png(png_path);
  std::vector<uint8_t> bits(img.pixels.size());
  for (size_t i = 0; i < bits.size(); ++i) {
    if (img.pixels[i] != 0 && img.pixels[i] != 255) {
      throw Error(ErrorKind::Format, png_path.string() + " is not a binary mask");
    }
    bits[i] = img.pixels[i] ? 1 : 0;
  }
  return VesselMask(Shape2{img.rows, img.cols}, std::move(bits), source);
}

void write_png(const GrayImage& image, const fs::path& path) {
  if (image.rows < 1 || image.cols < 1 ||
      static_cast<int64_t>(image.pixels.size()) != image.rows * image.cols) {
    throw Error(ErrorKind::Shape, "gray image payload does not match its size");
  }
  write_png_rows(path, image.rows, image.cols, PNG_COLOR_TYPE_GRAY, 1, image.pixels.data());
}

void write_png(const RgbImage& image, const fs::path& path) {
  if (image.rows < 1 || image.cols < 1 ||
      static_cast<int64_t>(image.pixels.size()) != image.rows * image.cols * 3) {
    throw Error(ErrorKind::Shape, "rgb image payload does not match its size");
  }
  write_png_rows(path, image.rows, image.cols, PNG_COLOR_TYPE_RGB, 3, image.pixels.data());
}

GrayImage read_png(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::Io, "cannot open " + path.string());
  PngReadGuard guard;
  guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!guard.png) throw Error(ErrorKind::Io, "png_create_read_struct failed");
  guard.info = png_create_info_struct(guard.png);
  if (!guard.info) throw Error(ErrorKind::Io, "png_create_info_struct failed");
  if (setjmp(png_jmpbuf(guard.png))) throw Error(ErrorKind::Format, "libpng error reading " + path.string());
  png_init_io(guard.png, file.get());
  png_read_info(guard.png, guard.info);
  const auto cols = png_get_image_width(guard.png, guard.info);
  const auto rows = png_get_image_height(guard.png, guard.info);
  const auto color = png_get_color_type(guard.png, guard.info);
  const auto depth = png_get_bit_depth(guard.png, guard.info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    throw Error(ErrorKind::Format, path.string() + " is not an 8-bit grayscale PNG");
  }
  GrayImage img{static_cast<int64_t>(rows), static_cast<int64_t>(cols), {}};
  img.pixels.resize(static_cast<size_t>(rows) * cols);
  for (png_uint_32 r = 0; r < rows; ++r) {
    png_read_row(guard.png, img.pixels.data() + static_cast<size_t>(r) * cols, nullptr);
  }
  png_read_end(guard.png, nullptr);
  return img;
}

}  // namespace projgan
