#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "synthvol/errors.hpp"
#include "synthvol/metrics.hpp"

using namespace synthvol;

namespace {

Volume random_unit(const VoxelGrid& g, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> d(g.voxel_count());
    for (auto& v : d) {
        v = u(gen);
    }
    return Volume(g, 1, std::move(d));
}

} // namespace

TEST_CASE("l1, mse and psnr closed forms") {
    const VoxelGrid g = VoxelGrid::make({4, 1, 1});
    const Volume a(g, 1, {0.0f, 0.0f, 0.0f, 0.0f});
    const Volume b(g, 1, {0.1f, -0.1f, 0.1f, -0.1f});
    CHECK(l1(a, b) == doctest::Approx(0.1));
    CHECK(mse(a, b) == doctest::Approx(0.01));
    CHECK(psnr(a, b) == doctest::Approx(20.0));
    CHECK(psnr(a, b, 255.0) == doctest::Approx(20.0 + 20.0 * std::log10(255.0)));
    CHECK(std::isinf(psnr(a, a)));
    CHECK(psnr_from_mse(0.0, 1.0) > 0);
    const Mask m(g, {1, 1, 0, 0});
    const Volume c(g, 1, {0.2f, 0.2f, 5.0f, 5.0f});
    CHECK(l1(a, c, &m) == doctest::Approx(0.2));
    CHECK(l1(a, c) == doctest::Approx(2.6));
    CHECK(l1(a, b) == l1(b, a));
    CHECK_THROWS_AS(l1(a, Volume::filled(VoxelGrid::make({3, 1, 1}), 1, 0.0f)), ShapeError);
}

TEST_CASE("ssim matches the direct window sum") {
    const VoxelGrid g = VoxelGrid::make({16, 15, 14});
    const Volume a = random_unit(g, 1);
    std::vector<float> d = a.copy_data();
    std::mt19937_64 gen(2);
    std::normal_distribution<float> n(0.0f, 0.1f);
    for (auto& x : d) {
        x = std::clamp(x + n(gen), 0.0f, 1.0f);
    }
    const Volume b(g, 1, d);
    const double s = ssim(a, b);
    CHECK(s == doctest::Approx(oracle::direct_ssim(a, b)).epsilon(1e-10));
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s < 1.0);
    CHECK_THROWS_AS(ssim(Volume::filled(VoxelGrid::make({10, 20, 20}), 1, 0.f),
                         Volume::filled(VoxelGrid::make({10, 20, 20}), 1, 0.f)),
                    DomainError);
}

TEST_CASE("ms-ssim domain and identity") {
    const VoxelGrid small = VoxelGrid::make({64, 64, 64});
    CHECK_THROWS_AS(ms_ssim(Volume::filled(small, 1, 0.5f), Volume::filled(small, 1, 0.5f)), DomainError);
    SsimParams three;
    three.scales = 3;
    three.weights = {0.2, 0.3, 0.5};
    const VoxelGrid g = VoxelGrid::make({48, 48, 48});
    const Volume a = random_unit(g, 3);
    CHECK(ms_ssim(a, a, three) == doctest::Approx(1.0).epsilon(1e-10));
    const Volume b = random_unit(g, 4);
    const double m = ms_ssim(a, b, three);
    CHECK(m >= 0.0);
    CHECK(m < 1.0);
}

TEST_CASE("downsample2 averages blocks") {
    const VoxelGrid g = VoxelGrid::make({4, 2, 3}, Vec3(1.0, 1.0, 2.0));
    std::vector<float> d(g.voxel_count());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = float(i);
    }
    const Volume v(g, 1, d);
    const Volume h = downsample2(v);
    CHECK(h.grid().dims == Index3{2, 1, 1});
    CHECK(h.grid().spacing == Vec3(2.0, 2.0, 4.0));
    const float want = (0 + 1 + 4 + 5 + 8 + 9 + 12 + 13) / 8.0f;
    CHECK(h.at(0, 0, 0) == doctest::Approx(want));
}

TEST_CASE("dice per label and mean") {
    const VoxelGrid g = VoxelGrid::make({6, 1, 1});
    const LabelVolume a(g, {0, 1, 1, 2, 2, 0});
    const LabelVolume b(g, {0, 1, 2, 2, 2, 3});
    const DiceResult r = dice(a, b);
    CHECK(r.per_label.at(1) == doctest::Approx(2.0 * 1 / 3));
    CHECK(r.per_label.at(2) == doctest::Approx(2.0 * 2 / 5));
    CHECK(r.per_label.at(3) == 0.0);
    CHECK(r.mean == doctest::Approx((2.0 / 3 + 0.8 + 0.0) / 3));
    CHECK(dice(a, a).mean == 1.0);
    const LabelVolume bg(g, std::vector<std::int32_t>(6, 0));
    CHECK(std::isnan(dice(bg, bg).mean));
}

TEST_CASE("norm_l2 is scale invariant") {
    const VoxelGrid g = VoxelGrid::make({8, 8, 8});
    const Volume f = random_unit(g, 5);
    std::vector<float> d = f.copy_data();
    for (auto& x : d) {
        x *= 4.0f; // power of two keeps the product exact
    }
    CHECK(norm_l2(Volume(g, 1, d), f) == 0.0);
    const Volume h = random_unit(g, 6);
    CHECK(norm_l2(h, f) > 0.0);
}

TEST_CASE("metric report serialisation") {
    MetricReport r;
    r.scalars["psnr"] = std::numeric_limits<double>::infinity();
    r.scalars["l1"] = 0.5;
    const auto j = r.to_json();
    CHECK(j["metrics"]["psnr"] == "inf");
    CHECK(j["metrics"]["l1"] == 0.5);
    CHECK_FALSE(j.contains("dice"));
    CHECK(r.to_table().find("l1") != std::string::npos);
}
