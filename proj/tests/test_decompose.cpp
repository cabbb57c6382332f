#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pddwi/decompose.hpp"
#include "pddwi/rng.hpp"

using namespace pddwi;

namespace {

std::vector<std::pair<double, double>> monoexp_samples(double s0, double adc,
                                                       const std::vector<double>& bvalues) {
    std::vector<std::pair<double, double>> out;
    for (double b : bvalues) out.emplace_back(b, s0 * std::exp(-b * adc));
    return out;
}

}  // namespace

TEST_CASE("fit_monoexp: constant signal gives ADC exactly zero") {
    const auto fit = fit_monoexp({{0.0, 1000.0}, {800.0, 1000.0}});
    REQUIRE(fit.has_value());
    CHECK(fit->adc == 0.0);
    CHECK(fit->log_s0 == doctest::Approx(std::log(1000.0)).epsilon(1e-14));
    CHECK(fit->residual == 0.0);
}

TEST_CASE("fit_monoexp recovers the generating decay rate") {
    const auto samples = monoexp_samples(1000.0, 1.5e-3, {0.0, 100.0, 600.0, 800.0});
    const auto fit = fit_monoexp(samples);
    REQUIRE(fit.has_value());
    CHECK(std::abs(fit->adc - 1.5e-3) / 1.5e-3 < 1e-10);
    CHECK(std::abs(fit->log_s0 - std::log(1000.0)) / std::log(1000.0) < 1e-10);
    CHECK(fit->residual < 1e-20);
}

TEST_CASE("fit_monoexp: two-point closed form is exact") {
    const auto fit = fit_monoexp({{0.0, 1000.0}, {100.0, 500.0}});
    REQUIRE(fit.has_value());
    CHECK(fit->adc == std::log(2.0) / 100.0);
    CHECK(fit->log_s0 == std::log(1000.0));
    CHECK(fit->residual == 0.0);
}

TEST_CASE("fit_monoexp error paths") {
    CHECK_THROWS_AS((void)fit_monoexp({{0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS((void)fit_monoexp({{0.0, 1.0}, {0.0, 2.0}}), std::invalid_argument);
    CHECK_FALSE(fit_monoexp({{0.0, 1000.0}, {100.0, 0.0}}).has_value());
    CHECK_FALSE(fit_monoexp({{0.0, -3.0}, {100.0, 5.0}}).has_value());
}

TEST_CASE("fit_monoexp round-trips random noiseless parameters") {
    Rng rng(41);
    for (int i = 0; i < 200; ++i) {
        const double s0 = rng.uniform(1.0, 5000.0);
        const double adc = rng.uniform(0.0, 5e-3);
        const auto fit = fit_monoexp(monoexp_samples(s0, adc, {0.0, 100.0, 600.0, 800.0}));
        REQUIRE(fit.has_value());
        CHECK(std::abs(fit->adc - adc) <= 1e-10 * std::max(adc, 1e-6));
        CHECK(std::abs(fit->log_s0 - std::log(s0)) <= 1e-10 * std::abs(std::log(s0)) + 1e-12);
    }
}

TEST_CASE("ivim_forward matches direct evaluation") {
    const BValueSet bv = BValueSet::canonical();
    const IVIMParams p{1000.0, 1e-3, 50e-3, 0.2};

    SUBCASE("b=0 returns s0 for any parameters") {
        CHECK(ivim_forward(p, bv)[0] == 1000.0);
        CHECK(ivim_forward({37.5, 2e-3, 9e-3, 0.9}, bv)[0] == doctest::Approx(37.5).epsilon(1e-15));
    }

    SUBCASE("f=0 collapses to the mono-exponential model") {
        const IVIMParams mono{1000.0, 1e-3, 50e-3, 0.0};
        const auto sig = ivim_forward(mono, bv);
        for (std::size_t c = 0; c < bv.size(); ++c)
            CHECK(sig[c] == doctest::Approx(1000.0 * std::exp(-bv[c] * 1e-3)).epsilon(1e-15));
    }

    SUBCASE("fast and slow compartments sum per the model at b=800") {
        const double expected = 1000.0 * (0.2 * std::exp(-800.0 * (50e-3 + 1e-3)) +
                                          0.8 * std::exp(-800.0 * 1e-3));
        const auto sig = ivim_forward(p, bv);
        CHECK(sig[3] == expected);
        CHECK(sig[3] == doctest::Approx(359.46).epsilon(1e-4));
    }
}

TEST_CASE("ivim_forward output is positive and non-increasing in b") {
    Rng rng(77);
    const BValueSet bv = BValueSet::canonical();
    for (int i = 0; i < 200; ++i) {
        IVIMParams p;
        p.s0 = rng.uniform(1.0, 2000.0);
        p.d = rng.uniform(0.0, 3e-3);
        p.d_star = p.d + rng.uniform(0.0, 0.1);
        p.f = rng.uniform(0.0, 1.0);
        const auto sig = ivim_forward(p, bv);
        for (std::size_t c = 0; c < sig.size(); ++c) {
            CHECK(sig[c] > 0.0);
            if (c > 0) CHECK(sig[c] <= sig[c - 1]);
        }
    }
}

TEST_CASE("compute_f: pure mono-exponential voxels give F = 0") {
    const auto study = testing::uniform_study({1000.0, 1.2e-3, 1.2e-3, 0.0});
    const auto f = compute_f(study);
    for (std::size_t v = 0; v < f.data.size(); ++v) {
        CHECK(f.valid[v] == 1);
        CHECK(f.data[v] <= 1e-12);
    }
}

TEST_CASE("compute_f recovers the pseudo-diffusion fraction within 0.02") {
    const auto study = testing::uniform_study({1000.0, 1e-3, 50e-3, 0.2});
    const auto f = compute_f(study);
    for (std::size_t v = 0; v < f.data.size(); ++v) {
        REQUIRE(f.valid[v] == 1);
        CHECK(std::abs(f.data[v] - 0.2) < 0.02);
    }
}

TEST_CASE("compute_f marks s(0) <= 0 voxels invalid") {
    auto study = testing::uniform_study({1000.0, 1e-3, 50e-3, 0.2});
    study.signal[0] = 0.0;  // b=0 channel, voxel 0
    const auto f = compute_f(study);
    CHECK(f.valid[0] == 0);
    CHECK(f.valid[1] == 1);
}

TEST_CASE("decompose_study produces the canonical subset maps") {
    const auto study = testing::uniform_study({1000.0, 1e-3, 50e-3, 0.2});
    const auto maps = decompose_study(study);
    REQUIRE(maps.size() == 4);
    REQUIRE(maps.count(kMapAdc0_100));
    REQUIRE(maps.count(kMapAdc100_800));
    REQUIRE(maps.count(kMapAdc0_800));
    REQUIRE(maps.count(kMapF));

    // Each map equals a direct per-voxel fit over its subset.
    const auto signals = ivim_forward({1000.0, 1e-3, 50e-3, 0.2}, study.bvalues);
    const auto low = fit_monoexp({{0.0, signals[0]}, {100.0, signals[1]}});
    const auto high =
        fit_monoexp({{100.0, signals[1]}, {600.0, signals[2]}, {800.0, signals[3]}});
    CHECK(maps.at(kMapAdc0_100).data[0] == doctest::Approx(low->adc).epsilon(1e-14));
    CHECK(maps.at(kMapAdc100_800).data[0] == doctest::Approx(high->adc).epsilon(1e-14));
}

TEST_CASE("decompose_study: mono-exponential input gives equal maps and F = 0") {
    const double d = 1.7e-3;
    const auto study = testing::uniform_study({800.0, d, d, 0.0});
    const auto maps = decompose_study(study);
    for (const char* name : {kMapAdc0_100, kMapAdc100_800, kMapAdc0_800}) {
        const auto& map = maps.at(name);
        for (std::size_t v = 0; v < map.data.size(); ++v) {
            REQUIRE(map.valid[v] == 1);
            CHECK(std::abs(map.data[v] - d) / d < 1e-10);
        }
    }
    for (std::size_t v = 0; v < maps.at(kMapF).data.size(); ++v)
        CHECK(maps.at(kMapF).data[v] <= 1e-12);
}

TEST_CASE("decompose_study: pseudo-diffusion orders the subset maps") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        IVIMParams p;
        p.s0 = 1000.0;
        p.d = rng.uniform(0.5e-3, 2.5e-3);
        p.d_star = rng.uniform(5e-3, 100e-3);
        p.f = rng.uniform(0.02, 0.4);
        if (p.d_star <= p.d) continue;
        const auto study = testing::uniform_study(p, BValueSet::canonical(), {1, 1, 2});
        const auto maps = decompose_study(study);
        const double a_low = maps.at(kMapAdc0_100).data[0];
        const double a_all = maps.at(kMapAdc0_800).data[0];
        const double a_high = maps.at(kMapAdc100_800).data[0];
        CHECK(a_low >= a_all);
        CHECK(a_all >= a_high);
        CHECK(a_low > a_high);  // strict when F > 0, D* > D
    }
}

TEST_CASE("decompose_study is voxel-local") {
    auto study_a = testing::uniform_study({1000.0, 1e-3, 50e-3, 0.2});
    auto study_b = study_a;
    // Perturb one voxel in study_b; all other voxels must be unaffected.
    const std::size_t voxels = study_a.mask.size();
    study_b.signal[2 * voxels + 5] *= 0.9;

    const auto maps_a = decompose_study(study_a);
    const auto maps_b = decompose_study(study_b);
    for (const char* name : {kMapAdc0_100, kMapAdc100_800, kMapAdc0_800, kMapF}) {
        const auto& ma = maps_a.at(name);
        const auto& mb = maps_b.at(name);
        for (std::size_t v = 0; v < voxels; ++v) {
            if (v == 5 && std::string(name) != kMapAdc0_100) continue;
            CHECK(ma.data[v] == mb.data[v]);
        }
    }
    CHECK(maps_a.at(kMapAdc0_800).data[5] != maps_b.at(kMapAdc0_800).data[5]);
}

TEST_CASE("decompose_study validates its input") {
    auto study = testing::uniform_study({1000.0, 1e-3, 1e-3, 0.0});
    study.mask = Mask3({9, 9, 9}, 1);
    CHECK_THROWS_AS((void)decompose_study(study), DataError);
}

TEST_CASE("any study passing validation is accepted downstream") {
    Rng rng(404);
    for (int rep = 0; rep < 30; ++rep) {
        IVIMParams p;
        p.s0 = rng.uniform(10.0, 2000.0);
        p.d = rng.uniform(0.0, 3e-3);
        p.d_star = p.d + rng.uniform(0.0, 0.1);
        p.f = rng.uniform(0.0, 0.5);
        auto study = testing::uniform_study(p);
        // sprinkle noise-floor voxels; they must not break acceptance
        for (int k = 0; k < 3; ++k)
            study.signal[rng.below(study.signal.size())] = 0.0;
        if (!validate_study(study).empty()) continue;
        CHECK_NOTHROW((void)decompose_study(study));
        CHECK_NOTHROW((void)compute_f(study));
    }
}

TEST_CASE("derived map validity stays within the study mask") {
    auto study = testing::uniform_study({1000.0, 1e-3, 50e-3, 0.2});
    study.mask = Mask3(study.mask.dims(), 0);
    study.mask[3] = 1;
    study.mask[7] = 1;
    const auto maps = decompose_study(study);
    for (const auto& [name, map] : maps) {
        for (std::size_t v = 0; v < map.valid.size(); ++v) {
            if (map.valid[v]) CHECK(study.mask[v] == 1);
        }
        CHECK(map.valid[3] == 1);
    }
}
