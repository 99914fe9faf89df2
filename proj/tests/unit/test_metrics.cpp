#include <cmath>
#include <random>

#include "test_prelude.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "projgan/error.hpp"
#include "projgan/metrics.hpp"

using namespace projgan;

namespace {

constexpr int kInstances = 50;

ProjectionMap noised(const ProjectionMap& m, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<float> v(m.data().begin(), m.data().end());
  for (auto& x : v) x = static_cast<float>(std::clamp(x + n(rng), 0.0, 1.0));
  return ProjectionMap(m.shape(), std::move(v));
}

std::vector<std::vector<int>> to_rows(const VesselMask& m) {
  std::vector<std::vector<int>> out(static_cast<size_t>(m.shape().L), std::vector<int>(static_cast<size_t>(m.shape().W)));
  for (int64_t l = 0; l < m.shape().L; ++l)
    for (int64_t w = 0; w < m.shape().W; ++w) out[l][w] = m.at(l, w);
  return out;
}

// Vessel-like test map: bright lines on a dim noisy background.
ProjectionMap striped(Shape2 s, std::mt19937_64& rng) {
  ProjectionMap m = testing::random_map(s, rng);
  std::uniform_int_distribution<int64_t> col(0, s.W - 1);
  for (auto& x : m.data()) x *= 0.2f;
  for (int k = 0; k < 4; ++k) {
    const int64_t w = col(rng);
    for (int64_t l = 0; l < s.L; ++l) m.at(l, w) = 0.9f;
  }
  return m;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("identical volumes") {
    std::mt19937_64 rng(1);
    const Volume y = testing::random_volume({16, 4, 16}, rng);
    const VolumeMetrics m = volume_metrics(y, y);
    CHECK(m.mae == 0.0);
    CHECK(m.ssim == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.psnr == kPsnrCap);
    CHECK(m.capped_slices == 4);
  }

  TEST_CASE("uniform slice MSE of 0.01 gives 20 dB") {
    Volume a({8, 3, 8}, 0.2f), b({8, 3, 8}, 0.3f);
    int64_t capped = -1;
    const PsnrValue p = psnr_volume(a, b, &capped);
    CHECK(p.db == doctest::Approx(20.0).epsilon(1e-5));
    CHECK_FALSE(p.capped);
    CHECK(capped == 0);
  }

  TEST_CASE("volume metrics match the per-slice oracle") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < kInstances; ++i) {
      const Volume y = testing::random_volume({16, 4, 16}, rng);
      const Volume p = testing::random_volume({16, 4, 16}, rng);
      CHECK(mae_volume(y, p) == doctest::Approx(oracle::per_bscan(y, p, oracle::mae)).epsilon(1e-6));
      CHECK(psnr_volume(y, p).db == doctest::Approx(oracle::per_bscan(y, p, oracle::psnr)).epsilon(1e-6));
      CHECK(ssim_volume(y, p) == doctest::Approx(oracle::per_bscan(y, p, oracle::ssim)).epsilon(1e-6));
    }
  }

  TEST_CASE("SSIM on images smaller than the window") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
      const Volume y = testing::random_volume({6, 2, 9}, rng);
      const Volume p = testing::random_volume({6, 2, 9}, rng);
      CHECK(ssim_volume(y, p) == doctest::Approx(oracle::per_bscan(y, p, oracle::ssim)).epsilon(1e-6));
    }
  }

  TEST_CASE("volume shapes must agree") {
    Volume a({4, 4, 4}), b({4, 4, 5});
    CHECK_THROWS_AS(mae_volume(a, b), Error);
    CHECK_THROWS_AS(ssim_volume(a, b), Error);
  }

  TEST_CASE("weighted suite matches the oracle") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> g(0.05, 1.0);
    for (int i = 0; i < kInstances; ++i) {
      const Shape2 s{24, 20};
      const ProjectionMap gt = testing::random_map(s, rng), pr = testing::random_map(s, rng);
      const VesselMask mask = testing::random_mask(s, rng);
      const double gamma = g(rng);
      const WeightedMetrics m = weighted_metric_suite(gt, pr, mask, {gamma});
      const auto vg = oracle::weight(oracle::map(gt), mask, gamma);
      const auto vp = oracle::weight(oracle::map(pr), mask, gamma);
      CHECK(m.mae_v == doctest::Approx(oracle::mae(vg, vp)).epsilon(1e-6));
      CHECK(m.psnr_v == doctest::Approx(oracle::psnr(vg, vp)).epsilon(1e-6));
      CHECK(m.ssim_v == doctest::Approx(oracle::ssim(vg, vp)).epsilon(1e-6));
    }
  }

  TEST_CASE("vessel_weight scales only background pixels") {
    ProjectionMap m({2, 2}, 0.5f);
    VesselMask mask({2, 2}, {1, 0, 0, 1}, MaskSource::AnnotatedGroundTruth);
    const ProjectionMap v = vessel_weight(m, mask, {0.1});
    CHECK(v.at(0, 0) == 0.5f);
    CHECK(v.at(0, 1) == doctest::Approx(0.05f));
    CHECK(v.at(1, 1) == 0.5f);
    CHECK_THROWS_AS(vessel_weight(m, mask, {0.0}), Error);
    CHECK_THROWS_AS(vessel_weight(m, mask, {1.5}), Error);
  }

  TEST_CASE("gamma of one collapses to the unweighted metrics") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
      const ProjectionMap gt = testing::random_map({32, 32}, rng), pr = testing::random_map({32, 32}, rng);
      const VesselMask mask = testing::random_mask({32, 32}, rng);
      const WeightedMetrics m = weighted_metric_suite(gt, pr, mask, {1.0});
      CHECK(m.mae_v == mae(view(gt), view(pr)));
      CHECK(m.psnr_v == psnr(view(gt), view(pr)).db);
      CHECK(m.ssim_v == ssim(view(gt), view(pr)));
    }
  }

  TEST_CASE("identical maps give perfect weighted scores for any gamma") {
    std::mt19937_64 rng(6);
    const ProjectionMap gt = testing::random_map({32, 32}, rng);
    const VesselMask mask = testing::random_mask({32, 32}, rng);
    for (double g : default_gamma_list()) {
      const WeightedMetrics m = weighted_metric_suite(gt, gt, mask, {g});
      CHECK(m.mae_v == 0.0);
      CHECK(m.psnr_v == kPsnrCap);
      CHECK(m.psnr_capped);
      CHECK(m.ssim_v == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("derived masks are rejected by weighted metrics") {
    std::mt19937_64 rng(7);
    const ProjectionMap gt = testing::random_map({16, 16}, rng);
    const VesselMask derived = segment_global_mean_threshold(gt);
    CHECK(derived.source() == MaskSource::MeanThresholdDerived);
    try {
      weighted_metric_suite(gt, gt, derived, {0.1});
      FAIL("expected a Source error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Source);
    }
  }

  TEST_CASE("gamma sweep") {
    std::mt19937_64 rng(8);
    std::vector<ProjectionMap> gt, pr;
    std::vector<VesselMask> masks;
    for (int i = 0; i < 3; ++i) {
      gt.push_back(testing::random_map({32, 32}, rng));
      pr.push_back(testing::random_map({32, 32}, rng));
      masks.push_back(testing::random_mask({32, 32}, rng));
    }
    const auto gammas = default_gamma_list();
    REQUIRE(gammas.size() == 10);
    CHECK(gammas.front() == 1.0);
    CHECK(gammas.back() == doctest::Approx(0.1));
    const GammaSeries s = gamma_sweep(gt, pr, masks, gammas);
    REQUIRE(s.mae_v.size() == 10);
    for (size_t k = 1; k < s.mae_v.size(); ++k) CHECK(s.mae_v[k] <= s.mae_v[k - 1] + 1e-12);
    double unweighted = 0;
    for (size_t i = 0; i < gt.size(); ++i) unweighted += mae(view(gt[i]), view(pr[i]));
    CHECK(s.mae_v.front() == doctest::Approx(unweighted / 3).epsilon(1e-12));

    const GammaSeries flat = gamma_sweep(gt, gt, masks, gammas);
    for (size_t k = 0; k < 10; ++k) {
      CHECK(flat.mae_v[k] == 0.0);
      CHECK(flat.psnr_v[k] == kPsnrCap);
      CHECK(flat.ssim_v[k] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_SUITE("segmentation") {
  TEST_CASE("constant map has no vessels") {
    const VesselMask m = segment_global_mean_threshold(ProjectionMap({8, 8}, 0.4f));
    for (uint8_t x : m.data()) CHECK(x == 0);
  }

  TEST_CASE("half dark half bright") {
    ProjectionMap m({4, 4}, 0.0f);
    for (int64_t w = 0; w < 4; ++w)
      for (int64_t l = 0; l < 2; ++l) m.at(l, w) = 1.0f;
    const VesselMask mask = segment_global_mean_threshold(m);
    for (int64_t l = 0; l < 4; ++l)
      for (int64_t w = 0; w < 4; ++w) CHECK(mask.at(l, w) == (l < 2 ? 1 : 0));
  }

  TEST_CASE("threshold matches the two-pass oracle") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < kInstances; ++i) {
      const ProjectionMap m = testing::random_map({19, 23}, rng);
      CHECK(to_rows(segment_global_mean_threshold(m)) == oracle::threshold(oracle::map(m)));
      CHECK(segment_global_mean_threshold(m) == segment_global_mean_threshold(m));
    }
  }

  TEST_CASE("vessel density") {
    CHECK(vessel_density(VesselMask({4, 4}, std::vector<uint8_t>(16, 1), MaskSource::AnnotatedGroundTruth)) == 1.0);
    CHECK(vessel_density(VesselMask({4, 4}, MaskSource::AnnotatedGroundTruth)) == 0.0);
    std::vector<uint8_t> three(16, 0);
    three[0] = three[5] = three[15] = 1;
    CHECK(vessel_density(VesselMask({4, 4}, three, MaskSource::AnnotatedGroundTruth)) == 0.1875);

    std::mt19937_64 rng(10);
    for (int i = 0; i < kInstances; ++i) {
      const VesselMask m = testing::random_mask({13, 17}, rng, 0.4);
      const double d = vessel_density(m);
      CHECK(d == doctest::Approx(oracle::density(to_rows(m))).epsilon(1e-12));
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
}

TEST_SUITE("vessel-density-metrics") {
  TEST_CASE("VDE basics") {
    std::mt19937_64 rng(11);
    std::vector<ProjectionMap> gt{testing::random_map({16, 16}, rng), testing::random_map({16, 16}, rng)};
    CHECK(vde(gt, gt) == 0.0);

    // Densities 0.25 and 0.5 by construction.
    ProjectionMap a({4, 4}, 0.0f), b({4, 4}, 0.0f);
    for (int64_t w = 0; w < 4; ++w) a.at(0, w) = 1.0f;
    for (int64_t w = 0; w < 4; ++w) b.at(0, w) = b.at(1, w) = 1.0f;
    std::vector<ProjectionMap> ga{a}, pb{b};
    CHECK(vde(ga, pb) == doctest::Approx(0.25));

    std::vector<ProjectionMap> empty;
    CHECK_THROWS_AS(vde(empty, empty), Error);
  }

  TEST_CASE("VDE matches the loop oracle") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < kInstances; ++i) {
      std::vector<ProjectionMap> gt, pr;
      double expect = 0;
      for (int k = 0; k < 3; ++k) {
        gt.push_back(striped({20, 24}, rng));
        pr.push_back(testing::random_map({20, 24}, rng));
        expect += std::fabs(oracle::density(oracle::threshold(oracle::map(pr.back()))) -
                            oracle::density(oracle::threshold(oracle::map(gt.back()))));
      }
      const double v = vde(gt, pr);
      CHECK(v == doctest::Approx(expect / 3).epsilon(1e-6));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }

  TEST_CASE("density array layout") {
    const VesselMask ones({32, 32}, std::vector<uint8_t>(1024, 1), MaskSource::MeanThresholdDerived);
    const DensityArray d = density_array(ones, 16);
    REQUIRE(d.values.size() == 4);
    for (double x : d.values) CHECK(x == 1.0);
    CHECK_FALSE(d.cropped);

    VesselMask quad({32, 32}, MaskSource::MeanThresholdDerived);
    for (int64_t l = 0; l < 16; ++l)
      for (int64_t w = 16; w < 32; ++w) quad.at(l, w) = 1;
    CHECK(density_array(quad, 16).values == std::vector<double>{0.0, 1.0, 0.0, 0.0});

    CHECK_THROWS_AS(density_array(ones, 33), Error);
  }

  TEST_CASE("density array matches the per-patch count oracle") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < kInstances; ++i) {
      const VesselMask m = testing::random_mask({32, 32}, rng, 0.35);
      const auto expect = oracle::patch_densities(to_rows(m), 16);
      const auto got = density_array(m, 16).values;
      REQUIRE(got.size() == expect.size());
      for (size_t k = 0; k < got.size(); ++k) CHECK(got[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("non-divisible maps are center-cropped and flagged") {
    std::mt19937_64 rng(14);
    const VesselMask m = testing::random_mask({36, 34}, rng);
    const DensityArray d = density_array(m, 16);
    CHECK(d.cropped);
    REQUIRE(d.values.size() == 4);
    // Crop offsets are (2, 1).
    auto rows = to_rows(m);
    std::vector<std::vector<int>> inner(32, std::vector<int>(32));
    for (int l = 0; l < 32; ++l)
      for (int w = 0; w < 32; ++w) inner[l][w] = rows[l + 2][w + 1];
    const auto expect = oracle::patch_densities(inner, 16);
    for (size_t k = 0; k < 4; ++k) CHECK(d.values[k] == doctest::Approx(expect[k]).epsilon(1e-12));

    std::vector<ProjectionMap> g{testing::random_map({36, 34}, rng)};
    CHECK(vdc(g, g, 16).cropped);
  }

  TEST_CASE("VDC of identical and complementary arrays") {
    std::mt19937_64 rng(15);
    std::vector<ProjectionMap> gt{striped({64, 64}, rng)};
    const VdcResult same = vdc(gt, gt, 16);
    REQUIRE(same.per_pair[0].has_value());
    CHECK(*same.per_pair[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same.value == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> d{0.1, 0.4, 0.2, 0.9};
    std::vector<double> c;
    for (double x : d) c.push_back(1.0 - x);
    CHECK(*pearson(d, c) == doctest::Approx(-1.0).epsilon(1e-12));
  }

  TEST_CASE("VDC matches the covariance oracle") {
    std::mt19937_64 rng(16);
    for (int i = 0; i < kInstances; ++i) {
      std::vector<ProjectionMap> gt{striped({32, 32}, rng)}, pr{testing::random_map({32, 32}, rng)};
      const auto g = oracle::patch_densities(oracle::threshold(oracle::map(gt[0])), 16);
      const auto p = oracle::patch_densities(oracle::threshold(oracle::map(pr[0])), 16);
      bool degenerate = false;
      const double expect = oracle::pearson(p, g, &degenerate);
      const VdcResult r = vdc(gt, pr, 16);
      CHECK(r.per_pair[0].has_value() == !degenerate);
      CHECK(r.value == doctest::Approx(expect).epsilon(1e-9));
      CHECK(r.value >= -1.0 - 1e-12);
      CHECK(r.value <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("constant density arrays count as degenerate and contribute zero") {
    ProjectionMap ramp({32, 32});
    for (int64_t l = 0; l < 32; ++l)
      for (int64_t w = 0; w < 32; ++w) ramp.at(l, w) = static_cast<float>(l * 32 + w) / 1024.0f;
    std::vector<ProjectionMap> gt{ramp, ramp};
    std::vector<ProjectionMap> pr{ProjectionMap({32, 32}, 0.5f), gt[1]};
    const VdcResult r = vdc(gt, pr, 16);
    CHECK(r.degenerate_pairs == 1);
    CHECK_FALSE(r.per_pair[0].has_value());
    CHECK(r.value == doctest::Approx(0.5 * *r.per_pair[1]).epsilon(1e-12));

    std::vector<ProjectionMap> empty;
    CHECK_THROWS_AS(vdc(empty, empty, 16), Error);
    std::vector<ProjectionMap> one{gt[0]};
    CHECK_THROWS_AS(vdc(gt, one, 16), Error);
  }

  TEST_CASE("ranking sanity") {
    std::mt19937_64 rng(18);
    std::vector<ProjectionMap> gt, mild, heavy;
    for (int i = 0; i < 4; ++i) {
      gt.push_back(striped({64, 64}, rng));
      mild.push_back(noised(gt.back(), 0.03, rng));
      heavy.push_back(noised(gt.back(), 0.4, rng));
    }
    auto mean_mae = [&](const std::vector<ProjectionMap>& p) {
      double s = 0;
      for (size_t i = 0; i < gt.size(); ++i) s += mae(view(gt[i]), view(p[i]));
      return s;
    };
    CHECK(mean_mae(gt) < mean_mae(mild));
    CHECK(mean_mae(mild) < mean_mae(heavy));
    CHECK(vde(gt, gt) <= vde(gt, mild));
    CHECK(vde(gt, mild) < vde(gt, heavy));
    CHECK(vdc(gt, gt).value >= vdc(gt, mild).value);
    CHECK(vdc(gt, mild).value > vdc(gt, heavy).value);
  }
}
