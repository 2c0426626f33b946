#include <cmath>
#include <random>

#include "doctest.h"
#include "radiomics/error.hpp"
#include "radiomics/survival.hpp"

using namespace radiomics;

namespace {

PatientRecord rec(double t, int event) {
    PatientRecord r;
    r.id = "x";
    r.os_months = t;
    r.event = event;
    return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("censored times are imputed from later deaths") {
    const std::vector<PatientRecord> r{rec(10, 1), rec(20, 1), rec(30, 1), rec(15, 0), rec(40, 0), rec(20, 0)};
    const auto t = impute_censored(r);
    CHECK(t == std::vector<double>{10, 20, 30, 25, 40, 25});
    const std::vector<PatientRecord> none{rec(3, 0), rec(4, 0)};
    CHECK_THROWS_AS(impute_censored(none), Error);
}

TEST_CASE("median split puts ties at the median in the short group") {
    const std::vector<double> odd{5, 1, 3};
    const auto a = median_split(odd);
    CHECK(a.median == 3);
    CHECK(a.labels == std::vector<int>{1, 0, 0});
    const std::vector<double> even{4, 1, 2, 8};
    const auto b = median_split(even);
    CHECK(b.median == 3);
    CHECK(b.labels == std::vector<int>{1, 0, 0, 1});
}

TEST_CASE("Kaplan-Meier on the four subject table") {
    const std::vector<SurvivalObservation> g{{1, 1}, {2, 1}, {3, 0}, {4, 1}};
    const KmCurve c = km_estimate(g);
    REQUIRE(c.steps.size() == 3);
    CHECK(c.steps[0].survival == 0.75);
    CHECK(c.steps[1].survival == 0.5);
    CHECK(c.steps[2].survival == 0.0);
    CHECK(c.steps[2].at_risk == 1);
    CHECK(c.median_survival == std::optional<double>(2.0));
    CHECK(c.survival_at(0.5) == 1.0);
    CHECK(c.survival_at(3.5) == 0.5);
}

TEST_CASE("Kaplan-Meier without censoring is the empirical survival function") {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> t(1, 30);
    std::vector<SurvivalObservation> g(57);
    for (auto& o : g) o = {static_cast<double>(t(rng)), 1};
    const KmCurve c = km_estimate(g);
    for (const auto& step : c.steps) {
        int beyond = 0;
        for (const auto& o : g) beyond += o.time > step.time;
        CHECK(step.survival == doctest::Approx(beyond / 57.0).epsilon(1e-12));
    }
    CHECK_FALSE(km_estimate(std::vector<SurvivalObservation>{{1, 0}, {2, 1}, {3, 0}, {4, 0}, {5, 0}}).median_survival.has_value());
}

TEST_CASE("log-rank of a group against itself") {
    const std::vector<SurvivalObservation> g{{1, 1}, {2, 0}, {2, 1}, {5, 1}, {9, 0}};
    const auto r = logrank_test(g, g);
    CHECK(r.chi2 == 0.0);
    CHECK(r.p_value == 1.0);
    REQUIRE(r.hazard_ratio);
    CHECK(*r.hazard_ratio == 1.0);
}

TEST_CASE("log-rank on early versus late deaths") {
    const std::vector<SurvivalObservation> a{{1, 1}, {2, 1}}, b{{100, 1}, {200, 1}};
    const auto r = logrank_test(a, b);
    // Tables at t=1 (n=4, nA=2), t=2 (3, 1); later tables have nA=0.
    CHECK(r.observed_a == 2.0);
    CHECK(r.expected_a == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(r.observed_a - r.expected_a == doctest::Approx(7.0 / 6.0).epsilon(1e-15));
    CHECK(r.variance == doctest::Approx(17.0 / 36.0).epsilon(1e-15));
    CHECK(r.chi2 == doctest::Approx(49.0 / 17.0).epsilon(1e-14));
    CHECK(rel(r.p_value, 0.08955507441364257793) < 1e-10);
    REQUIRE(r.hazard_ratio);
    CHECK(*r.hazard_ratio == doctest::Approx(3.8).epsilon(1e-14));
    CHECK(*r.ci_low < 3.8);
    CHECK(*r.ci_high > 3.8);
}

TEST_CASE("log-rank is symmetric in the groups and ignores the time scale") {
    std::mt19937_64 rng(14);
    std::exponential_distribution<double> fast(0.2), slow(0.05);
    std::bernoulli_distribution seen(0.8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<SurvivalObservation> a(15), b(18);
        for (auto& o : a) o = {std::ceil(fast(rng)), seen(rng) ? 1 : 0};
        for (auto& o : b) o = {std::ceil(slow(rng)), seen(rng) ? 1 : 0};
        a[0].event = 1;
        const auto ab = logrank_test(a, b), ba = logrank_test(b, a);
        CHECK(std::abs(ab.chi2 - ba.chi2) <= 1e-12 * std::max(1.0, ab.chi2));
        if (ab.hazard_ratio && ba.hazard_ratio) CHECK(*ab.hazard_ratio * *ba.hazard_ratio == doctest::Approx(1.0));
        auto scale = [](std::vector<SurvivalObservation> g) {
            for (auto& o : g) o.time *= 3.5;
            return g;
        };
        CHECK(logrank_test(scale(a), scale(b)).chi2 == ab.chi2);
    }
}

TEST_CASE("log-rank error paths") {
    const std::vector<SurvivalObservation> censored{{1, 0}, {2, 0}}, empty;
    CHECK_THROWS_AS(logrank_test(censored, censored), Error);
    CHECK_THROWS_AS(logrank_test(censored, empty), Error);
}

TEST_CASE("chi-square upper tail against high precision values") {
    CHECK(chi2_sf(0.0) == 1.0);
    const std::pair<double, double> df1[] = {
        {0.5, 0.4795001221869534623},   {1.0, 0.3173105078629141028},   {3.841, 0.05001368376395670480},
        {6.635, 0.009999419574042523773}, {10.0, 0.001565402258002549677}, {50.0, 1.537459794428034850e-12},
    };
    for (auto [x, want] : df1) CHECK(rel(chi2_sf(x), want) < 1e-10);
    CHECK(rel(chi2_sf(5.0, 3), 0.1717971442967331351) < 1e-10);
    CHECK(rel(chi2_sf(9.488, 4), 0.04999440557799463526) < 1e-10);
    CHECK(chi2_sf(1e6) > 0.0);
    CHECK_THROWS_AS(chi2_sf(-1.0), Error);
}
