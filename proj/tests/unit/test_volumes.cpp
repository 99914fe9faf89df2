#include <fstream>

#include "test_prelude.hpp"
#include "helpers.hpp"
#include "json.hpp"
#include "projgan/digest.hpp"
#include "projgan/error.hpp"
#include "projgan/volume.hpp"
#include "projgan/volume_io.hpp"

using namespace projgan;

TEST_SUITE("volumes") {
  TEST_CASE("storage is C-order with depth innermost") {
    Volume v(Shape3{2, 3, 4});
    CHECK(v.index(0, 0, 1) == 1);
    CHECK(v.index(0, 1, 0) == 4);
    CHECK(v.index(1, 0, 0) == 12);
    CHECK(v.index(1, 2, 3) == 23);
  }

  TEST_CASE("constant volume projects to the same constant") {
    const Volume v(Shape3{4, 5, 6}, 0.5f);
    const ProjectionMap m = project_mean(v);
    CHECK(m.shape() == Shape2{4, 5});
    for (float x : m.data()) CHECK(x == doctest::Approx(0.5).epsilon(1e-7));
  }

  TEST_CASE("depth ramp projects to its mean") {
    Volume v(Shape3{2, 2, 4});
    for (int64_t l = 0; l < 2; ++l)
      for (int64_t w = 0; w < 2; ++w)
        for (int64_t d = 0; d < 4; ++d) v.at(l, w, d) = static_cast<float>(d) / 3.0f;
    const ProjectionMap m = project_mean(v);
    for (float x : m.data()) CHECK(x == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("single-depth volume projects to its only slice") {
    std::mt19937_64 rng(3);
    const Volume v = testing::random_volume(Shape3{5, 7, 1}, rng);
    const ProjectionMap m = project_mean(v);
    for (int64_t l = 0; l < 5; ++l)
      for (int64_t w = 0; w < 7; ++w) CHECK(m.at(l, w) == v.at(l, w, 0));
  }

  TEST_CASE("projection agrees with a naive per-pixel loop") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int64_t> dim(1, 16), depth(1, 32);
    for (int trial = 0; trial < 25; ++trial) {
      const Shape3 s{dim(rng), dim(rng), depth(rng)};
      const Volume v = testing::random_volume(s, rng);
      const ProjectionMap m = project_mean(v);
      for (int64_t l = 0; l < s.L; ++l)
        for (int64_t w = 0; w < s.W; ++w) {
          long double acc = 0;
          for (int64_t d = 0; d < s.D; ++d) acc += v.data()[static_cast<size_t>((l * s.W + w) * s.D + d)];
          CHECK(std::abs(static_cast<double>(acc / s.D) - m.at(l, w)) < 1e-6);
        }
    }
  }

  TEST_CASE("projection stays in the unit range") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      const ProjectionMap m = project_mean(testing::random_volume(Shape3{6, 6, 9}, rng));
      for (float x : m.data()) CHECK((x >= 0.0f && x <= 1.0f));
    }
  }

  TEST_CASE("out-of-range and non-finite values are rejected") {
    CHECK_THROWS_AS(Volume(Shape3{1, 1, 2}, std::vector<float>{0.5f, 1.5f}), Error);
    CHECK_THROWS_AS(Volume(Shape3{1, 1, 2}, std::vector<float>{-0.1f, 0.5f}), Error);
    CHECK_THROWS_AS(Volume(Shape3{1, 1, 1}, std::vector<float>{std::nanf("")}), Error);
    CHECK_THROWS_AS(Volume(Shape3{1, 1, 2}, std::vector<float>{0.5f}), Error);
    try {
      Volume(Shape3{1, 1, 1}, std::vector<float>{2.0f});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Range);
    }
  }

  TEST_CASE("raw volumes round-trip through their sidecar") {
    testing::TempDir tmp("vol");
    std::mt19937_64 rng(7);
    const Volume v = testing::random_volume(Shape3{3, 4, 5}, rng);
    const auto path = tmp.path() / "oct.raw";
    save_volume(v, path);
    CHECK(std::filesystem::exists(tmp.path() / "oct.json"));
    CHECK(std::filesystem::file_size(path) == 3 * 4 * 5 * 4);
    CHECK(load_volume(path) == v);

    const auto side = nlohmann::json::parse(std::ifstream(tmp.path() / "oct.json"));
    CHECK(side.at("shape") == nlohmann::json::array({3, 4, 5}));
    CHECK(side.at("axes") == nlohmann::json::array({"L", "W", "D"}));
    CHECK(side.at("dtype") == "f32le");
  }

  TEST_CASE("payload size mismatch is a shape error") {
    testing::TempDir tmp("vol_bad");
    save_volume(Volume(Shape3{2, 2, 2}, 0.25f), tmp.path() / "x.raw");
    std::ofstream(tmp.path() / "x.raw", std::ios::app | std::ios::binary).write("abcd", 4);
    try {
      (void)load_volume(tmp.path() / "x.raw");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Shape);
    }
  }

  TEST_CASE("missing sidecar and unknown sidecar keys fail") {
    testing::TempDir tmp("vol_side");
    save_volume(Volume(Shape3{1, 2, 2}, 0.25f), tmp.path() / "x.raw");
    auto side = nlohmann::json::parse(std::ifstream(tmp.path() / "x.json"));
    side["extra"] = 1;
    std::ofstream(tmp.path() / "x.json") << side.dump();
    CHECK_THROWS_AS(load_volume(tmp.path() / "x.raw"), Error);
    std::filesystem::remove(tmp.path() / "x.json");
    try {
      (void)load_volume(tmp.path() / "x.raw");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
    }
  }

  TEST_CASE("stored values outside [0, 1] are rejected on load") {
    testing::TempDir tmp("vol_range");
    save_volume(Volume(Shape3{1, 1, 2}, 0.25f), tmp.path() / "x.raw");
    const float bad[2] = {0.25f, 3.0f};
    std::ofstream(tmp.path() / "x.raw", std::ios::binary | std::ios::trunc)
        .write(reinterpret_cast<const char*>(bad), sizeof bad);
    try {
      (void)load_volume(tmp.path() / "x.raw");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Range);
    }
  }

  TEST_CASE("projection maps round-trip and export as 8-bit images") {
    testing::TempDir tmp("map");
    std::mt19937_64 rng(9);
    const ProjectionMap m = testing::random_map(Shape2{6, 5}, rng);
    save_projection_map(m, tmp.path() / "p.raw");
    CHECK(load_projection_map(tmp.path() / "p.raw") == m);
    save_projection_image(m, tmp.path() / "p.png");
    const GrayImage img = read_png(tmp.path() / "p.png");
    CHECK(img.rows == 6);
    CHECK(img.cols == 5);
    for (int64_t i = 0; i < 30; ++i) CHECK(img.pixels[static_cast<size_t>(i)] == intensity_to_byte(m.data()[i]));
  }

  TEST_CASE("intensity quantization rounds half up") {
    CHECK(intensity_to_byte(0.0f) == 0);
    CHECK(intensity_to_byte(1.0f) == 255);
    CHECK(intensity_to_byte(0.5f) == 128);
    CHECK(intensity_to_byte(1.0f / 255.0f) == 1);
  }

  TEST_CASE("masks round-trip through PNG") {
    testing::TempDir tmp("mask");
    std::mt19937_64 rng(2);
    const VesselMask m = testing::random_mask(Shape2{9, 4}, rng);
    save_mask_image(m, tmp.path() / "m.png");
    CHECK(load_mask_image(tmp.path() / "m.png", MaskSource::AnnotatedGroundTruth) == m);
    const GrayImage img = read_png(tmp.path() / "m.png");
    for (size_t i = 0; i < img.pixels.size(); ++i) CHECK(img.pixels[i] == (m.data()[i] ? 255 : 0));
  }
}

TEST_SUITE("digest") {
  TEST_CASE("sha256 matches the standard test vectors") {
    CHECK(sha256_hex(std::string("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("derived seeds are stable and label-sensitive") {
    CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  }
}
