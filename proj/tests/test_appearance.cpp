#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "synthvol/appearance.hpp"
#include "synthvol/errors.hpp"

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

double total_variation(const Volume& v) {
    const auto& d = v.grid().dims;
    double tv = 0;
    for (std::int64_t k = 0; k < d[2]; ++k) {
        for (std::int64_t j = 0; j < d[1]; ++j) {
            for (std::int64_t i = 0; i + 1 < d[0]; ++i) {
                tv += std::abs(v.at(i + 1, j, k) - v.at(i, j, k));
            }
        }
    }
    for (std::int64_t k = 0; k < d[2]; ++k) {
        for (std::int64_t j = 0; j + 1 < d[1]; ++j) {
            for (std::int64_t i = 0; i < d[0]; ++i) {
                tv += std::abs(v.at(i, j + 1, k) - v.at(i, j, k));
            }
        }
    }
    for (std::int64_t k = 0; k + 1 < d[2]; ++k) {
        for (std::int64_t j = 0; j < d[1]; ++j) {
            for (std::int64_t i = 0; i < d[0]; ++i) {
                tv += std::abs(v.at(i, j, k + 1) - v.at(i, j, k));
            }
        }
    }
    return tv;
}

} // namespace

TEST_CASE("degenerate prior paints exact means") {
    const LabelVolume labels = oracle::phantom_labels({16, 16, 16});
    ContrastPrior prior;
    prior.mu_std = 0.0;
    prior.sigma_scale = 0.0;
    const PaintedImage p = paint_contrast(labels, Rng(1), prior);
    for (float x : p.image.data()) {
        REQUIRE(x == float(0.5));
    }
    CHECK(p.draws.size() == labels.label_set().size());
}

TEST_CASE("two-label painting separates classes") {
    const VoxelGrid g = VoxelGrid::make({20, 10, 10});
    std::vector<std::int32_t> lab(g.voxel_count());
    for (std::size_t o = 0; o < lab.size(); ++o) {
        lab[o] = g.unravel(o)[0] < 10 ? 1 : 2;
    }
    const LabelVolume labels(g, lab);
    ContrastPrior prior;
    prior.per_label_overrides[1] = {0.2, 0.0, 0.01};
    prior.per_label_overrides[2] = {0.8, 0.0, 0.01};
    const PaintedImage p = paint_contrast(labels, Rng(2), prior);
    CHECK(p.draws.at(1).mu == 0.2);
    CHECK(p.draws.at(2).mu == 0.8);
    for (std::size_t o = 0; o < lab.size(); ++o) {
        if (lab[o] == 1) {
            CHECK(p.image.data()[o] < 0.5f);
        } else {
            CHECK(p.image.data()[o] > 0.5f);
        }
    }
}

TEST_CASE("painting replays from its draws") {
    const LabelVolume labels = oracle::phantom_labels({20, 18, 16});
    const Rng rng(31);
    const ContrastPrior prior;
    const PaintedImage p = paint_contrast(labels, rng, prior);
    const auto draws = draw_label_params(labels, rng, prior);
    REQUIRE(draws.size() == p.draws.size());
    for (const auto& [l, d] : draws) {
        CHECK(d.mu == p.draws.at(l).mu);
        CHECK(d.sigma == p.draws.at(l).sigma);
        CHECK(d.sigma >= 0.0);
    }
    const Volume again = paint_labels(labels, rng, draws);
    CHECK(std::equal(again.data().begin(), again.data().end(), p.image.data().begin()));
    auto partial = draws;
    partial.erase(partial.begin());
    CHECK_THROWS_AS(paint_labels(labels, rng, partial), DomainError);
    for (float x : p.image.data()) {
        REQUIRE(x >= 0.0f);
        REQUIRE(x <= 1.0f);
    }
}

TEST_CASE("bias field is positive and zero amplitude is flat") {
    const VoxelGrid g = VoxelGrid::make({24, 20, 16}, Vec3(2.0, 2.0, 2.0));
    const Volume flat = sample_bias_field(Rng(4), g, 0.0, 48.0);
    for (float x : flat.data()) {
        REQUIRE(x == 1.0f);
    }
    const Volume b = sample_bias_field(Rng(4), g, 0.5, 48.0);
    for (float x : b.data()) {
        REQUIRE(x > 0.0f);
    }
    const Volume img = random_unit(g, 5);
    const Volume out = apply_bias(img, b);
    for (std::size_t i = 0; i < img.voxel_count(); ++i) {
        CHECK(out.data()[i] == doctest::Approx(std::min(1.0f, img.data()[i] * b.data()[i])).epsilon(1e-6));
    }
}

TEST_CASE("noise standard deviation matches sigma / 255") {
    const VoxelGrid g = VoxelGrid::make({64, 64, 32});
    const Volume mid = Volume::filled(g, 1, 0.5f);
    const Volume n = add_noise(mid, 10.0, Rng(6));
    double s = 0, s2 = 0;
    for (float x : n.data()) {
        s += x - 0.5;
        s2 += (x - 0.5) * (x - 0.5);
    }
    const double count = double(n.voxel_count());
    const double sd = std::sqrt(s2 / count - (s / count) * (s / count));
    CHECK(sd == doctest::Approx(10.0 / 255.0).epsilon(0.05));
    const Volume none = add_noise(mid, 0.0, Rng(6));
    CHECK(std::equal(none.data().begin(), none.data().end(), mid.data().begin()));
}

TEST_CASE("resolution model") {
    const VoxelGrid g = VoxelGrid::make({24, 24, 24});
    const Volume img = random_unit(g, 7);

    SUBCASE("native spacing is the identity") {
        const Volume out = simulate_resolution(img, Vec3::Ones());
        CHECK(std::equal(out.data().begin(), out.data().end(), img.data().begin()));
    }
    SUBCASE("constant volumes stay constant") {
        const Volume c = Volume::filled(g, 1, 0.3f);
        const Volume out = simulate_resolution(c, Vec3(1, 1, 5));
        for (float x : out.data()) {
            CHECK(x == doctest::Approx(0.3).epsilon(1e-6));
        }
    }
    SUBCASE("thick z slices leave in-plane profiles unmixed") {
        // An image varying only along x keeps that variation exactly.
        std::vector<float> d(g.voxel_count());
        for (std::size_t o = 0; o < d.size(); ++o) {
            d[o] = float(g.unravel(o)[0]) / 23.0f;
        }
        const Volume ramp(g, 1, d);
        const Volume out = simulate_resolution(ramp, Vec3(1, 1, 4));
        for (std::size_t o = 0; o < d.size(); ++o) {
            CHECK(out.data()[o] == doctest::Approx(d[o]).epsilon(1e-5));
        }
    }
    SUBCASE("thicker slices contract total variation") {
        const double base = total_variation(img);
        double prev = base;
        for (double s : {2.0, 3.0, 5.0}) {
            const double tv = total_variation(simulate_resolution(img, Vec3(1, 1, s)));
            CHECK(tv < prev);
            prev = tv;
        }
    }
}

TEST_CASE("gamma and mixup") {
    const VoxelGrid g = VoxelGrid::make({2, 1, 1});
    const Volume v(g, 1, {0.5f, 1.0f});
    const Volume sq = apply_gamma(v, 2.0);
    CHECK(sq.data()[0] == 0.25f);
    CHECK(sq.data()[1] == 1.0f);
    Rng r(3);
    const GammaResult off = gamma_augment(v, r, 0.0);
    CHECK(off.gamma == 1.0);
    CHECK(std::equal(off.image.data().begin(), off.image.data().end(), v.data().begin()));

    const Volume a(g, 1, {1.0f, 0.0f});
    const Volume b(g, 1, {0.0f, 1.0f});
    const Volume m = mixup(a, b, 0.25);
    CHECK(m.data()[0] == doctest::Approx(0.25));
    CHECK(m.data()[1] == doctest::Approx(0.75));
    const Volume pure = mixup(a, b, 1.0);
    CHECK(std::equal(pure.data().begin(), pure.data().end(), a.data().begin()));

    MixupPrior prior;
    Rng s(4);
    CHECK(sample_mixup_lambda(s, prior, false) == 1.0);
    for (int i = 0; i < 100; ++i) {
        const double l = sample_mixup_lambda(s, prior, true);
        CHECK(l >= prior.lambda.lo);
        CHECK(l <= prior.lambda.hi);
    }
    MixupPrior bad;
    bad.lambda = Range{0.5, 1.5};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("normalisation") {
    const VoxelGrid g = VoxelGrid::make({3, 1, 1});
    const Volume v(g, 1, {-2.0f, 0.0f, 6.0f});
    const Volume n = normalize_min_max(v);
    CHECK(n.data()[0] == 0.0f);
    CHECK(n.data()[1] == doctest::Approx(0.25));
    CHECK(n.data()[2] == 1.0f);
    const Volume c = normalize_min_max(Volume::filled(g, 1, 4.0f));
    CHECK(c.data()[2] == 0.0f);
    const Volume cl = clamp_unit(v);
    CHECK(cl.data()[0] == 0.0f);
    CHECK(cl.data()[2] == 1.0f);
}
