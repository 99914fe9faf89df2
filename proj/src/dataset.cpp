#include "projgan/dataset.hpp"

#include <algorithm>

#include "projgan/error.hpp"
#include "projgan/json_util.hpp"
#include "projgan/volume_io.hpp"

namespace projgan {
namespace fs = std::filesystem;

nlohmann::json load_manifest(const fs::path& root) {
  if (!fs::exists(root / "manifest.json")) {
    throw Error(ErrorKind::Io, "no dataset manifest under " + root.string());
  }
  return read_json_file(root / "manifest.json");
}

std::vector<DatasetSample> load_split(const fs::path& root, std::string_view split) {
  const auto manifest = load_manifest(root);
  const std::string key(split);
  if (!manifest.contains("splits") || !manifest["splits"].contains(key)) {
    throw Error(ErrorKind::Format, "manifest lists no split '" + key + "'");
  }
  std::vector<DatasetSample> out;
  for (const auto& entry : manifest["splits"][key]) {
    DatasetSample s;
    s.name = entry.at("name").get<std::string>();
    const fs::path dir = root / key / s.name;
    s.oct = load_volume(dir / "oct.raw");
    s.octa = load_volume(dir / "octa.raw");
    s.mask = load_mask_image(dir / "vessel_mask.png", MaskSource::AnnotatedGroundTruth);
    if (!(s.oct.shape() == s.octa.shape()) ||
        !(s.mask.shape() == Shape2{s.oct.shape().L, s.oct.shape().W})) {
      throw Error(ErrorKind::Shape, "sample " + dir.string() + " has inconsistent shapes");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Volume> load_predictions(const fs::path& split_dir, const std::vector<std::string>& names) {
  std::vector<Volume> out;
  out.reserve(names.size());
  for (const auto& name : names) out.push_back(load_volume(split_dir / name / "octa.raw"));
  return out;
}

torch::Tensor to_tensor(const Volume& v) {
  const Shape3& s = v.shape();
  return torch::from_blob(const_cast<float*>(v.data().data()), {1, 1, s.L, s.W, s.D}, torch::kFloat32).clone();
}

torch::Tensor to_tensor(const ProjectionMap& m) {
  const Shape2& s = m.shape();
  return torch::from_blob(const_cast<float*>(m.data().data()), {1, 1, s.L, s.W}, torch::kFloat32).clone();
}

torch::Tensor to_tensor(const VesselMask& m) {
  const Shape2& s = m.shape();
  std::vector<float> values(m.data().begin(), m.data().end());
  return torch::from_blob(values.data(), {1, 1, s.L, s.W}, torch::kFloat32).clone();
}

Volume to_volume(const torch::Tensor& t) {
  if (t.dim() != 5 || t.size(0) != 1 || t.size(1) != 1) {
    throw Error(ErrorKind::Shape, "to_volume expects [1, 1, L, W, D]");
  }
  const torch::Tensor c = t.detach().to(torch::kFloat32).contiguous().cpu();
  const float* p = c.data_ptr<float>();
  return Volume(Shape3{t.size(2), t.size(3), t.size(4)}, std::vector<float>(p, p + c.numel()));
}

ProjectionMap to_projection_map(const torch::Tensor& t) {
  if (t.dim() != 4 || t.size(0) != 1 || t.size(1) != 1) {
    throw Error(ErrorKind::Shape, "to_projection_map expects [1, 1, L, W]");
  }
  const torch::Tensor c = t.detach().to(torch::kFloat32).contiguous().cpu();
  const float* p = c.data_ptr<float>();
  return ProjectionMap(Shape2{t.size(2), t.size(3)}, std::vector<float>(p, p + c.numel()));
}

}  // namespace projgan
