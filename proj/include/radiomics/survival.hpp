#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radiomics {

struct PatientRecord {
    std::string id;
    double os_months = 0.0;
    int event = 0;  // 1 death observed, 0 censored at last follow-up
    double age = 0.0;
    int gender = 0;
    double macrophage_m1 = 0.0;
    double neutrophils = 0.0;
    double tfh = 0.0;

    void validate() const;
};

struct SurvivalObservation {
    double time = 0.0;
    int event = 0;
};

struct KmStep {
    double time = 0.0;
    int at_risk = 0;
    int deaths = 0;
    double survival = 1.0;
};

struct KmCurve {
    std::vector<KmStep> steps;  // one per distinct event time
    std::optional<double> median_survival;
    int subjects = 0;

    /// S(t), right-continuous; 1 before the first event.
    double survival_at(double t) const;
};

struct SurvivalTestResult {
    double chi2 = 0.0;
    double p_value = 1.0;
    double observed_a = 0.0;
    double expected_a = 0.0;
    double observed_b = 0.0;
    double expected_b = 0.0;
    double variance = 0.0;
    std::optional<double> hazard_ratio;  // absent when either expected count is zero
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    std::optional<double> median_a;
    std::optional<double> median_b;
};

/// Uncensored times are kept; a censored time becomes the mean of the
/// uncensored times at or beyond it, or stays as is when there are none.
std::vector<double> impute_censored(std::span<const PatientRecord> records);

struct MedianSplit {
    double median = 0.0;
    std::vector<int> labels;  // 0 when time <= median
};

MedianSplit median_split(std::span<const double> times);

KmCurve km_estimate(std::span<const SurvivalObservation> group);

/// Log-rank test of A against B with a Mantel-Haenszel O/E hazard ratio
/// (A relative to B) and its log-normal 95% interval.
SurvivalTestResult logrank_test(std::span<const SurvivalObservation> group_a,
                                std::span<const SurvivalObservation> group_b);

/// Upper tail of the chi-square distribution.
double chi2_sf(double x, int df = 1);

}  // namespace radiomics
