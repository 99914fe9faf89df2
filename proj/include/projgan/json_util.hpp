#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "json.hpp"
#include "projgan/error.hpp"
#include "projgan/volume.hpp"

namespace projgan {

// Reads optional keys from a JSON object and rejects any key that was never
// asked for once finish() is called.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorKind::Config, path_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      j_.at(key).get_to(out);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Config, path_ + "." + key + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw Error(ErrorKind::Config, "unknown key '" + path_ + "." + key + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Shapes serialize as [L, W, D] / [L, W].
void to_json(nlohmann::json& j, const Shape3& s);
void from_json(const nlohmann::json& j, Shape3& s);
void to_json(nlohmann::json& j, const Shape2& s);
void from_json(const nlohmann::json& j, Shape2& s);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);
// sha256 of the canonical (sorted-key, compact) dump.
std::string json_hash(const nlohmann::json& j);
// Rounds to 12 significant digits so dumps are stable and readable.
double stable_number(double x);

}  // namespace projgan
