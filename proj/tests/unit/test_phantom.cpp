#include <fstream>

#include "test_prelude.hpp"
#include "helpers.hpp"
#include "projgan/dataset.hpp"
#include "projgan/error.hpp"
#include "projgan/json_util.hpp"
#include "projgan/phantom.hpp"

using namespace projgan;
namespace fs = std::filesystem;

namespace {

PhantomConfig small_config() {
  PhantomConfig c;
  c.shape = {32, 32, 16};
  c.n_trees = 3;
  c.max_retries = 64;
  return c;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("phantom") {
  TEST_CASE("identical seeds give identical samples") {
    const auto c = small_config();
    const PhantomSample a = generate_sample(42, c);
    const PhantomSample b = generate_sample(42, c);
    CHECK(a.oct == b.oct);
    CHECK(a.octa == b.octa);
    CHECK(a.vessel_mask_2d == b.vessel_mask_2d);
    CHECK(a.vessel_volume_3d == b.vessel_volume_3d);
    CHECK_FALSE(generate_sample(43, c).octa == a.octa);
  }

  TEST_CASE("the 2D mask is the max projection of the 3D vessel grid") {
    const PhantomSample s = generate_sample(7, small_config());
    const Shape3 sh = s.vessel_volume_3d.shape;
    for (int64_t l = 0; l < sh.L; ++l)
      for (int64_t w = 0; w < sh.W; ++w) {
        uint8_t any = 0;
        for (int64_t d = 0; d < sh.D; ++d) any |= s.vessel_volume_3d.at(l, w, d);
        CHECK(s.vessel_mask_2d.at(l, w) == any);
      }
    CHECK(s.vessel_mask_2d.source() == MaskSource::AnnotatedGroundTruth);
  }

  TEST_CASE("samples lie in the unit range and vessels are bright in OCTA") {
    const PhantomSample s = generate_sample(3, small_config());
    s.oct.check_range();
    s.octa.check_range();
    double in_sum = 0, out_sum = 0;
    int64_t in_n = 0, out_n = 0;
    const Shape3 sh = s.octa.shape();
    for (int64_t l = 0; l < sh.L; ++l)
      for (int64_t w = 0; w < sh.W; ++w)
        for (int64_t d = 0; d < sh.D; ++d) {
          if (s.vessel_volume_3d.at(l, w, d)) {
            in_sum += s.octa.at(l, w, d);
            ++in_n;
          } else {
            out_sum += s.octa.at(l, w, d);
            ++out_n;
          }
        }
    REQUIRE(in_n > 0);
    CHECK(in_sum / in_n > 0.5);
    CHECK(out_sum / out_n < 0.1);
  }

  TEST_CASE("rasterizing one straight segment marks a tube") {
    Centerline line;
    line.nodes = {{2.0, 5.0, 4.0, 1.0}, {12.0, 5.0, 4.0, 1.0}};
    const VoxelGrid g = rasterize_vessels({line}, Shape3{16, 10, 8});
    CHECK(g.at(2, 5, 4) == 1);
    CHECK(g.at(7, 5, 4) == 1);
    CHECK(g.at(7, 6, 4) == 1);
    CHECK(g.at(7, 5, 5) == 1);
    CHECK(g.at(7, 6, 5) == 0);  // distance sqrt(2) > 1
    CHECK(g.at(7, 7, 4) == 0);
    CHECK(g.at(14, 5, 4) == 0);
  }

  TEST_CASE("shadowing darkens OCT below vessels") {
    PhantomConfig c = small_config();
    c.speckle_level = 0.0;
    VoxelGrid g(c.shape);
    g.at(10, 10, 4) = 1;
    const Volume oct = synth_oct_volume(g, 1, c);
    for (int64_t d = 5; d < c.shape.D; ++d) {
      CHECK(oct.at(10, 10, d) == doctest::Approx(c.shadow_strength * oct_layer_profile(d, c.shape.D)).epsilon(1e-5));
      CHECK(oct.at(11, 11, d) == doctest::Approx(oct_layer_profile(d, c.shape.D)).epsilon(1e-5));
    }
  }

  TEST_CASE("config validation and strict parsing") {
    PhantomConfig c;
    c.shape = {0, 4, 4};
    CHECK_THROWS_AS(c.validate(), Error);
    c = PhantomConfig{};
    c.target_density_band = {0.5, 0.1};
    CHECK_THROWS_AS(c.validate(), Error);
    nlohmann::json j = PhantomConfig{};
    CHECK(j.get<PhantomConfig>().n_trees == PhantomConfig{}.n_trees);
    j["bogus"] = 1;
    CHECK_THROWS_AS(j.get<PhantomConfig>(), Error);
    const PhantomConfig partial = nlohmann::json{{"n_trees", 2}}.get<PhantomConfig>();
    CHECK(partial.n_trees == 2);
    CHECK(partial.radius_start == PhantomConfig{}.radius_start);
  }

  TEST_CASE("datasets are reproducible byte for byte") {
    testing::TempDir a("ds_a"), b("ds_b");
    const DatasetCounts counts{2, 1, 1};
    const auto ma = generate_dataset(counts, 5, small_config(), a.path() / "d");
    const auto mb = generate_dataset(counts, 5, small_config(), b.path() / "d");
    CHECK(ma.at("dataset_hash") == mb.at("dataset_hash"));
    for (const char* f : {"train/sample_0000/oct.raw", "train/sample_0001/octa.raw", "test/sample_0000/vessel_mask.png",
                          "manifest.json"}) {
      CHECK(read_bytes(a.path() / "d" / f) == read_bytes(b.path() / "d" / f));
    }
    const auto samples = load_split(a.path() / "d", "train");
    REQUIRE(samples.size() == 2);
    for (const auto& s : samples) {
      const double density = [&] {
        double n = 0;
        for (uint8_t x : s.mask.data()) n += x;
        return n / static_cast<double>(s.mask.numel());
      }();
      CHECK(density >= small_config().target_density_band[0]);
      CHECK(density <= small_config().target_density_band[1]);
    }
    CHECK(generate_dataset(counts, 6, small_config(), b.path() / "d").at("dataset_hash") != ma.at("dataset_hash"));
  }

  TEST_CASE("an unreachable density band is infeasible") {
    testing::TempDir tmp("ds_inf");
    PhantomConfig c = small_config();
    c.target_density_band = {0.95, 1.0};
    c.max_retries = 2;
    try {
      generate_dataset({1, 1, 1}, 1, c, tmp.path() / "d");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Infeasible);
    }
  }

  TEST_CASE("refuses to write into a foreign non-empty directory") {
    testing::TempDir tmp("ds_foreign");
    std::ofstream(tmp.path() / "notes.txt") << "keep";
    CHECK_THROWS_AS(generate_dataset({1, 1, 1}, 1, small_config(), tmp.path()), Error);
    CHECK(fs::exists(tmp.path() / "notes.txt"));
  }
}
