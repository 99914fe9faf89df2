#include "projgan/json_util.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "projgan/digest.hpp"

namespace projgan {

void to_json(nlohmann::json& j, const Shape3& s) { j = {s.L, s.W, s.D}; }

void from_json(const nlohmann::json& j, Shape3& s) {
  const auto v = j.get<std::vector<int64_t>>();
  if (v.size() != 3 || v[0] < 1 || v[1] < 1 || v[2] < 1) {
    throw Error(ErrorKind::Config, "shape must be three positive integers [L, W, D]");
  }
  s = Shape3{v[0], v[1], v[2]};
}

void to_json(nlohmann::json& j, const Shape2& s) { j = {s.L, s.W}; }

void from_json(const nlohmann::json& j, Shape2& s) {
  const auto v = j.get<std::vector<int64_t>>();
  if (v.size() != 2 || v[0] < 1 || v[1] < 1) {
    throw Error(ErrorKind::Config, "shape must be two positive integers [L, W]");
  }
  s = Shape2{v[0], v[1]};
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::string json_hash(const nlohmann::json& j) { return sha256_hex(j.dump()); }

double stable_number(double x) {
  if (!std::isfinite(x)) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

}  // namespace projgan
