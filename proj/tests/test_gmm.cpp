#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "radiomics/error.hpp"
#include "radiomics/gmm.hpp"

using namespace radiomics;

namespace {

std::vector<double> bimodal(std::uint64_t seed, std::size_t n, double m0, double m1, double w0 = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution first(w0);
    std::vector<double> out(n);
    for (auto& x : out) x = (first(rng) ? m0 : m1) + g(rng);
    return out;
}

bool monotone(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] < trace[i - 1] - 1e-12 * std::abs(trace[i - 1])) return false;
    return true;
}

}  // namespace

TEST_CASE("pairwise_sum and variance_floor") {
    std::vector<double> v(1000, 0.1);
    CHECK(std::abs(pairwise_sum(v) - 100.0) < 1e-12);
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
    CHECK(variance_floor(std::vector<double>{0.0, 10.0}) == doctest::Approx(1e-4));
    CHECK(variance_floor(std::vector<double>{3.0, 3.0}) == 1e-12);
}

TEST_CASE("em_fit k=1 is the closed-form maximum likelihood estimate") {
    const std::vector<double> s{1.0, 2.0, 4.0, 7.0, 11.0};
    const GmmFit fit = em_fit(s, 1, 0);
    REQUIRE(fit.components.size() == 1);
    CHECK(fit.components[0].mu == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(fit.components[0].sigma2 == doctest::Approx(13.2).epsilon(1e-12));  // population variance
    CHECK(fit.components[0].omega == 1.0);
}

TEST_CASE("em_fit on a point mass returns the floored variance") {
    const std::vector<double> s(50, 3.25);
    const GmmFit fit = em_fit(s, 2, 0);
    REQUIRE(fit.components.size() == 2);
    for (const auto& c : fit.components) {
        CHECK(c.mu == 3.25);
        CHECK(c.sigma2 == 1e-12);
        CHECK(std::isfinite(c.omega));
    }
    CHECK(fit.components[0].omega + fit.components[1].omega == doctest::Approx(1.0));
    CHECK(fit.components[0].omega > fit.components[1].omega);
}

TEST_CASE("em_fit handles a ReLU-style zero spike") {
    std::vector<double> s(400, 0.0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(1.0, 3.0);
    for (int i = 0; i < 100; ++i) s.push_back(u(rng));
    const GmmFit fit = em_fit(s, 2, 0);
    CHECK(fit.components[0].mu == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(fit.components[0].omega == doctest::Approx(0.8).epsilon(1e-3));
    CHECK(fit.components[1].mu == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("em_fit recovers a well separated two component mixture") {
    const auto s = bimodal(123, 20000, 0.0, 10.0);
    const GmmFit fit = em_fit(s, 2, 123);
    REQUIRE(fit.components.size() == 2);
    CHECK(std::abs(fit.components[0].mu - 0.0) < 0.1);
    CHECK(std::abs(fit.components[1].mu - 10.0) < 0.1);
    CHECK(std::abs(fit.components[0].omega - 0.5) < 0.05);
    CHECK(std::abs(fit.components[1].omega - 0.5) < 0.05);
    CHECK(fit.converged);
    CHECK(monotone(fit.log_likelihood_trace));
    CHECK(fit.log_likelihood == fit.log_likelihood_trace.back());
}

TEST_CASE("EM log-likelihood never decreases") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(seed);
        const double gap = std::uniform_real_distribution<double>(0.0, 6.0)(rng);
        const double w = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
        const auto s = bimodal(seed, 1500, 0.0, gap, w);
        for (int k : {1, 2, 3}) {
            const GmmFit fit = em_fit(s, k, seed);
            CHECK(monotone(fit.log_likelihood_trace));
            double total = 0.0;
            for (const auto& c : fit.components) total += c.omega;
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
            for (std::size_t j = 1; j < fit.components.size(); ++j) CHECK(fit.components[j - 1].mu <= fit.components[j].mu);
        }
    }
}

TEST_CASE("em_fit_from is invariant to the order of the starting components") {
    const auto s = bimodal(9, 3000, -2.0, 3.0, 0.3);
    std::vector<GmmComponent> start{{-1.0, 2.0, 0.2}, {0.5, 1.0, 0.3}, {2.0, 3.0, 0.5}};
    const GmmFit ref = em_fit_from(s, start);
    std::sort(start.begin(), start.end(), [](auto& a, auto& b) { return a.mu > b.mu; });
    do {
        CHECK(em_fit_from(s, start) == ref);
    } while (std::next_permutation(start.begin(), start.end(), [](auto& a, auto& b) { return a.mu < b.mu; }));
}

TEST_CASE("em_fit is deterministic and shift equivariant") {
    const auto s = bimodal(31, 5000, 1.0, 5.0, 0.4);
    const GmmFit a = em_fit(s, 2, 1), b = em_fit(s, 2, 1);
    CHECK(a == b);
    std::vector<double> shifted(s);
    for (auto& x : shifted) x += 100.0;
    const GmmFit c = em_fit(shifted, 2, 1);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(c.components[j].mu - 100.0 == doctest::Approx(a.components[j].mu).epsilon(1e-6));
        CHECK(c.components[j].sigma2 == doctest::Approx(a.components[j].sigma2).epsilon(1e-6));
        CHECK(c.components[j].omega == doctest::Approx(a.components[j].omega).epsilon(1e-6));
    }
}

TEST_CASE("em_fit argument errors") {
    CHECK_THROWS_AS(em_fit(std::vector<double>{}, 2, 0), Error);
    CHECK_THROWS_AS(em_fit(std::vector<double>{1.0}, 0, 0), Error);
}

TEST_CASE("collect_samples returns exactly the masked voxels") {
    const Dims d{4, 4, 4};
    std::vector<float> data(d.count());
    std::vector<std::uint8_t> mask(d.count());
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                data[d.index(x, y, z)] = static_cast<float>(d.index(x, y, z));
                mask[d.index(x, y, z)] = (x + y + z) % 2;
            }
    auto s = collect_samples(Volume3D(d, {1, 1, 1}, data), RoiMask(d, mask));
    CHECK(s.size() == 32);
    for (double v : s) {
        const auto i = static_cast<std::size_t>(v);
        CHECK(mask[i] == 1);
    }
    CHECK_THROWS_AS(collect_samples(Volume3D(d, {1, 1, 1}, data), RoiMask(d, std::vector<std::uint8_t>(d.count(), 0))),
                    Error);
}

namespace {

// Reduced grids (16/8/4) keep the fits quick; the layout does not depend on size.
ActivationSet synthetic_activations(std::uint64_t seed, bool zero) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<float> g(2.0f, 1.0f);
    auto volume = [&](int n) {
        const Dims d{n, n, n};
        std::vector<float> v(d.count(), 0.0f);
        if (!zero)
            for (auto& x : v) x = g(rng);
        return Volume3D(d, {1, 1, 1}, v);
    };
    auto full = [](int n) {
        const Dims d{n, n, n};
        return RoiMask(d, std::vector<std::uint8_t>(d.count(), 1));
    };
    ActivationSet a;
    a.input_map = volume(16);
    for (int i = 0; i < kFilters; ++i) {
        a.layer1_maps.push_back(volume(8));
        a.layer2_maps.push_back(volume(4));
    }
    a.mask64 = full(16);
    a.mask32 = full(8);
    a.mask16 = full(4);
    return a;
}

}  // namespace

TEST_CASE("feature vector layout is 3 * k values per map") {
    const ActivationSet acts = synthetic_activations(5, false);
    for (int k : {1, 2, 3}) {
        const FeatureVector fv = build_feature_vector(acts, k, 42);
        CHECK(fv.values.size() == static_cast<std::size_t>(63 * k));
        CHECK(fv.names.size() == fv.values.size());
        for (double v : fv.values) CHECK(std::isfinite(v));
    }
    const FeatureVector fv = build_feature_vector(acts, 2, 42);
    CHECK(fv.values.size() == 126);
    CHECK(fv.names.front() == "f000_mu1");
    CHECK(fv.names[5] == "f000_w2");
    CHECK(fv.names.back() == "f020_w2");
    // Within each map block the weights sum to one and means ascend.
    for (int m = 0; m < kMapCount; ++m) {
        const double* b = &fv.values[static_cast<std::size_t>(6 * m)];
        CHECK(b[2] + b[5] == doctest::Approx(1.0));
        CHECK(b[0] <= b[3]);
    }
}

TEST_CASE("an all-zero activation set gives finite features") {
    const FeatureVector fv = build_feature_vector(synthetic_activations(0, true), 2, 42);
    REQUIRE(fv.values.size() == 126);
    for (double v : fv.values) CHECK(std::isfinite(v));
    CHECK(fv.values[0] == 0.0);
    CHECK(fv.values[1] == 1e-12);
}

TEST_CASE("reduce_modalities mean and concat") {
    FeatureVector a{"P1", {1.0, 2.0, 3.0}, {"x", "y", "z"}, ModalityReduction::Mean};
    FeatureVector b{"P1", {3.0, 6.0, 9.0}, {"x", "y", "z"}, ModalityReduction::Mean};
    const std::vector<FeatureVector> both{a, b};
    const FeatureVector mean = reduce_modalities(both, ModalityReduction::Mean);
    CHECK(mean.values == std::vector<double>{2.0, 4.0, 6.0});
    CHECK(mean.names == a.names);

    const std::vector<std::string> tags{"t1ce", "flair"};
    const FeatureVector cat = reduce_modalities(both, ModalityReduction::Concat, tags);
    CHECK(cat.values == std::vector<double>{1, 2, 3, 3, 6, 9});
    CHECK(cat.names[0] == "t1ce_x");
    CHECK(cat.names[5] == "flair_z");

    const std::vector<FeatureVector> single{a};
    CHECK(reduce_modalities(single, ModalityReduction::Mean).values == a.values);

    FeatureVector shortv{"P1", {1.0}, {"x"}, ModalityReduction::Mean};
    const std::vector<FeatureVector> ragged{a, shortv};
    CHECK_THROWS_AS(reduce_modalities(ragged, ModalityReduction::Mean), Error);
}
