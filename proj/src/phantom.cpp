#include "projgan/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "projgan/digest.hpp"
#include "projgan/error.hpp"
#include "projgan/json_util.hpp"
#include "projgan/volume_io.hpp"

namespace projgan {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

bool valid_band(const std::array<double, 2>& band) {
  return in_unit(band[0]) && in_unit(band[1]) && band[0] <= band[1];
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double gaussian(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

struct PendingBranch {
  CenterlineNode start;
  double heading = 0.0;
  int generation = 0;
};

}  // namespace

void PhantomConfig::validate() const {
  if (shape.L < 1 || shape.W < 1 || shape.D < 1) throw Error(ErrorKind::Config, "phantom shape must be positive");
  if (n_trees < 0) throw Error(ErrorKind::Config, "n_trees must be >= 0");
  if (!in_unit(branch_prob)) throw Error(ErrorKind::Config, "branch_prob must lie in [0, 1]");
  if (radius_start <= 0.0 || min_radius < 0.0) throw Error(ErrorKind::Config, "radii must be positive");
  if (radius_decay <= 0.0 || radius_decay > 1.0) throw Error(ErrorKind::Config, "radius_decay must lie in (0, 1]");
  if (turn_sigma < 0.0 || depth_sigma < 0.0) throw Error(ErrorKind::Config, "walk sigmas must be >= 0");
  if (!valid_band(depth_band)) throw Error(ErrorKind::Config, "depth_band must be an ordered range in [0, 1]");
  if (!valid_band(vessel_intensity_range)) {
    throw Error(ErrorKind::Config, "vessel_intensity_range must be an ordered range in [0, 1]");
  }
  if (!in_unit(speckle_level)) throw Error(ErrorKind::Config, "speckle_level must lie in [0, 1]");
  if (shadow_strength <= 0.0 || shadow_strength > 1.0) {
    throw Error(ErrorKind::Config, "shadow_strength must lie in (0, 1]");
  }
  if (!valid_band(target_density_band)) {
    throw Error(ErrorKind::Config, "target_density_band must be an ordered range in [0, 1]");
  }
  if (max_retries < 1) throw Error(ErrorKind::Config, "max_retries must be >= 1");
}

void to_json(json& j, const PhantomConfig& c) {
  j = json{{"shape", c.shape},
           {"n_trees", c.n_trees},
           {"branch_prob", c.branch_prob},
           {"radius_start", c.radius_start},
           {"radius_decay", c.radius_decay},
           {"min_radius", c.min_radius},
           {"turn_sigma", c.turn_sigma},
           {"depth_sigma", c.depth_sigma},
           {"depth_band", c.depth_band},
           {"vessel_intensity_range", c.vessel_intensity_range},
           {"speckle_level", c.speckle_level},
           {"shadow_strength", c.shadow_strength},
           {"target_density_band", c.target_density_band},
           {"max_retries", c.max_retries}};
}

void from_json(const json& j, PhantomConfig& c) {
  StrictObject o(j, "phantom");
  o.get("shape", c.shape);
  o.get("n_trees", c.n_trees);
  o.get("branch_prob", c.branch_prob);
  o.get("radius_start", c.radius_start);
  o.get("radius_decay", c.radius_decay);
  o.get("min_radius", c.min_radius);
  o.get("turn_sigma", c.turn_sigma);
  o.get("depth_sigma", c.depth_sigma);
  o.get("depth_band", c.depth_band);
  o.get("vessel_intensity_range", c.vessel_intensity_range);
  o.get("speckle_level", c.speckle_level);
  o.get("shadow_strength", c.shadow_strength);
  o.get("target_density_band", c.target_density_band);
  o.get("max_retries", c.max_retries);
  o.finish();
  c.validate();
}

std::vector<Centerline> grow_vessel_tree(uint64_t seed, const PhantomConfig& config) {
  config.validate();
  std::mt19937_64 rng(seed);
  const double max_l = static_cast<double>(config.shape.L - 1);
  const double max_w = static_cast<double>(config.shape.W - 1);
  const double max_d = static_cast<double>(config.shape.D - 1);
  const double depth_lo = config.depth_band[0] * max_d;
  const double depth_hi = config.depth_band[1] * max_d;
  const double depth_mid = 0.5 * (depth_lo + depth_hi);
  const int max_steps = static_cast<int>(2 * (config.shape.L + config.shape.W));
  const int max_branches = 16 * std::max(config.n_trees, 1);

  std::vector<Centerline> trees;
  for (int t = 0; t < config.n_trees; ++t) {
    // Trees enter from a random edge of the (L, W) plane and head inward.
    const int edge = static_cast<int>(uniform01(rng) * 4.0) % 4;
    const double along = uniform01(rng);
    CenterlineNode start;
    double heading = 0.0;
    switch (edge) {
      case 0: start.l = 0.0; start.w = along * max_w; heading = 0.0; break;
      case 1: start.l = max_l; start.w = along * max_w; heading = std::numbers::pi; break;
      case 2: start.l = along * max_l; start.w = 0.0; heading = 0.5 * std::numbers::pi; break;
      default: start.l = along * max_l; start.w = max_w; heading = -0.5 * std::numbers::pi; break;
    }
    heading += (uniform01(rng) - 0.5) * 0.5 * std::numbers::pi;
    start.d = std::clamp(depth_mid + gaussian(rng, 0.5), depth_lo, depth_hi);
    start.radius = config.radius_start;

    std::vector<PendingBranch> pending{{start, heading, 0}};
    int grown = 0;
    while (!pending.empty() && grown < max_branches) {
      PendingBranch branch = pending.back();
      pending.pop_back();
      ++grown;

      Centerline line;
      line.generation = branch.generation;
      line.nodes.push_back(branch.start);
      CenterlineNode pos = branch.start;
      double dir = branch.heading;
      for (int step = 0; step < max_steps; ++step) {
        dir += gaussian(rng, config.turn_sigma);
        CenterlineNode next = pos;
        next.l += std::cos(dir);
        next.w += std::sin(dir);
        next.d = std::clamp(pos.d + gaussian(rng, config.depth_sigma), depth_lo, depth_hi);
        if (next.l < 0.0 || next.l > max_l || next.w < 0.0 || next.w > max_w) break;
        line.nodes.push_back(next);
        pos = next;
        const double child_radius = pos.radius * config.radius_decay;
        if (uniform01(rng) < config.branch_prob && child_radius >= config.min_radius) {
          const double side = uniform01(rng) < 0.5 ? -1.0 : 1.0;
          const double angle = (1.0 / 6.0 + uniform01(rng) / 6.0) * std::numbers::pi;
          CenterlineNode child_start = pos;
          child_start.radius = child_radius;
          pending.push_back({child_start, dir + side * angle, branch.generation + 1});
        }
      }
      if (line.nodes.size() >= 2) trees.push_back(std::move(line));
    }
  }
  return trees;
}

VoxelGrid rasterize_vessels(const std::vector<Centerline>& trees, Shape3 shape) {
  VoxelGrid grid(shape);
  auto mark_segment = [&](const CenterlineNode& a, const CenterlineNode& b) {
    const double reach = std::max(a.radius, b.radius);
    const auto lo = [&](double x) { return static_cast<int64_t>(std::ceil(x - reach)); };
    const auto hi = [&](double x) { return static_cast<int64_t>(std::floor(x + reach)); };
    const int64_t l0 = std::max<int64_t>(0, lo(std::min(a.l, b.l)));
    const int64_t l1 = std::min<int64_t>(shape.L - 1, hi(std::max(a.l, b.l)));
    const int64_t w0 = std::max<int64_t>(0, lo(std::min(a.w, b.w)));
    const int64_t w1 = std::min<int64_t>(shape.W - 1, hi(std::max(a.w, b.w)));
    const int64_t d0 = std::max<int64_t>(0, lo(std::min(a.d, b.d)));
    const int64_t d1 = std::min<int64_t>(shape.D - 1, hi(std::max(a.d, b.d)));
    const double el = b.l - a.l, ew = b.w - a.w, ed = b.d - a.d;
    const double len2 = el * el + ew * ew + ed * ed;
    for (int64_t l = l0; l <= l1; ++l) {
      for (int64_t w = w0; w <= w1; ++w) {
        for (int64_t d = d0; d <= d1; ++d) {
          const double pl = static_cast<double>(l) - a.l;
          const double pw = static_cast<double>(w) - a.w;
          const double pd = static_cast<double>(d) - a.d;
          double t = len2 > 0.0 ? (pl * el + pw * ew + pd * ed) / len2 : 0.0;
          t = std::clamp(t, 0.0, 1.0);
          const double ql = pl - t * el, qw = pw - t * ew, qd = pd - t * ed;
          const double r = a.radius + t * (b.radius - a.radius);
          if (ql * ql + qw * qw + qd * qd <= r * r + 1e-12) grid.at(l, w, d) = 1;
        }
      }
    }
  };
  for (const auto& line : trees) {
    if (line.nodes.size() == 1) mark_segment(line.nodes[0], line.nodes[0]);
    for (size_t i = 1; i < line.nodes.size(); ++i) mark_segment(line.nodes[i - 1], line.nodes[i]);
  }
  return grid;
}

Volume synth_octa_volume(const VoxelGrid& vessels, uint64_t seed, const PhantomConfig& config) {
  std::mt19937_64 rng(derive_seed(seed, "octa"));
  const double lo = config.vessel_intensity_range[0];
  const double span = config.vessel_intensity_range[1] - lo;
  std::vector<float> data(vessels.data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    double v;
    if (vessels.data[i]) {
      v = lo + span * uniform01(rng);
    } else {
      v = gaussian(rng, config.speckle_level);
    }
    data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return Volume(vessels.shape, std::move(data));
}

float oct_layer_profile(int64_t d, int64_t depth) {
  const double z = depth > 1 ? static_cast<double>(d) / static_cast<double>(depth - 1) : 0.5;
  auto band = [z](double center, double width) {
    const double u = (z - center) / width;
    return std::exp(-u * u);
  };
  const double v = 0.08 + 0.55 * band(0.22, 0.06) + 0.30 * band(0.50, 0.12) + 0.45 * band(0.78, 0.05) +
                   0.25 * band(0.90, 0.04);
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

Volume synth_oct_volume(const VoxelGrid& vessels, uint64_t seed, const PhantomConfig& config) {
  std::mt19937_64 rng(derive_seed(seed, "oct"));
  const Shape3 s = vessels.shape;
  const float shadow = static_cast<float>(config.shadow_strength);
  std::vector<float> profile(static_cast<size_t>(s.D));
  for (int64_t d = 0; d < s.D; ++d) profile[static_cast<size_t>(d)] = oct_layer_profile(d, s.D);

  std::vector<float> data(static_cast<size_t>(s.numel()));
  for (int64_t l = 0; l < s.L; ++l) {
    for (int64_t w = 0; w < s.W; ++w) {
      int64_t first_vessel = s.D;
      for (int64_t d = 0; d < s.D; ++d) {
        if (vessels.at(l, w, d)) {
          first_vessel = d;
          break;
        }
      }
      for (int64_t d = 0; d < s.D; ++d) {
        float v = profile[static_cast<size_t>(d)];
        if (d > first_vessel) v *= shadow;
        double noisy = static_cast<double>(v) + gaussian(rng, config.speckle_level);
        data[static_cast<size_t>((l * s.W + w) * s.D + d)] = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
      }
    }
  }
  return Volume(s, std::move(data));
}

VesselMask max_project_mask(const VoxelGrid& vessels) {
  const Shape3 s = vessels.shape;
  VesselMask mask(Shape2{s.L, s.W}, MaskSource::AnnotatedGroundTruth);
  for (int64_t l = 0; l < s.L; ++l) {
    for (int64_t w = 0; w < s.W; ++w) {
      uint8_t any = 0;
      for (int64_t d = 0; d < s.D && !any; ++d) any = vessels.at(l, w, d);
      mask.at(l, w) = any;
    }
  }
  return mask;
}

PhantomSample generate_sample(uint64_t seed, const PhantomConfig& config) {
  config.validate();
  PhantomSample sample;
  sample.seed = seed;
  sample.vessel_volume_3d = rasterize_vessels(grow_vessel_tree(derive_seed(seed, "tree"), config), config.shape);
  sample.octa = synth_octa_volume(sample.vessel_volume_3d, seed, config);
  sample.oct = synth_oct_volume(sample.vessel_volume_3d, seed, config);
  sample.vessel_mask_2d = max_project_mask(sample.vessel_volume_3d);
  return sample;
}

namespace {

double mask_density(const VesselMask& mask) {
  int64_t ones = 0;
  for (uint8_t v : mask.data()) ones += v;
  return static_cast<double>(ones) / static_cast<double>(mask.numel());
}

}  // namespace

json generate_dataset(const DatasetCounts& counts, uint64_t master_seed, const PhantomConfig& config,
                      const fs::path& root) {
  config.validate();
  if (counts.n_train < 0 || counts.n_val < 0 || counts.n_test < 0) {
    throw Error(ErrorKind::Config, "sample counts must be >= 0");
  }
  std::error_code ec;
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!fs::exists(root / "manifest.json")) {
      throw Error(ErrorKind::Io, root.string() + " is not empty and holds no dataset manifest");
    }
    for (const char* split : {"train", "val", "test"}) fs::remove_all(root / split, ec);
  }
  fs::create_directories(root);

  json config_json = config;
  json manifest;
  manifest["config"] = config_json;
  manifest["config_hash"] = json_hash(config_json);
  manifest["master_seed"] = master_seed;
  manifest["counts"] = {{"train", counts.n_train}, {"val", counts.n_val}, {"test", counts.n_test}};
  manifest["splits"] = json::object();

  const std::pair<const char*, int> splits[] = {
      {"train", counts.n_train}, {"val", counts.n_val}, {"test", counts.n_test}};
  for (const auto& [split, count] : splits) {
    json entries = json::array();
    fs::create_directories(root / split);
    for (int index = 0; index < count; ++index) {
      PhantomSample sample;
      double density = -1.0;
      int attempt = 0;
      for (; attempt < config.max_retries; ++attempt) {
        sample = generate_sample(derive_seed(master_seed, split, static_cast<uint64_t>(index),
                                             static_cast<uint64_t>(attempt)),
                                 config);
        density = mask_density(sample.vessel_mask_2d);
        if (density >= config.target_density_band[0] && density <= config.target_density_band[1]) break;
      }
      if (attempt == config.max_retries) {
        throw Error(ErrorKind::Infeasible, std::string("no ") + split + " sample " + std::to_string(index) +
                                               " reached the target density band after " +
                                               std::to_string(config.max_retries) + " attempts");
      }
      char name[32];
      std::snprintf(name, sizeof name, "sample_%04d", index);
      const fs::path dir = root / split / name;
      fs::create_directories(dir);
      save_volume(sample.oct, dir / "oct.raw");
      save_volume(sample.octa, dir / "octa.raw");
      save_mask_image(sample.vessel_mask_2d, dir / "vessel_mask.png");
      json meta{{"split", split},
                {"index", index},
                {"seed", sample.seed},
                {"attempts", attempt + 1},
                {"density", stable_number(density)},
                {"shape", config.shape}};
      write_json_file(meta, dir / "meta.json");
      entries.push_back(
          {{"name", name}, {"seed", sample.seed}, {"attempts", attempt + 1}, {"density", stable_number(density)}});
    }
    manifest["splits"][split] = std::move(entries);
  }
  manifest["dataset_hash"] = json_hash(manifest);
  write_json_file(manifest, root / "manifest.json");
  return manifest;
}

}  // namespace projgan
