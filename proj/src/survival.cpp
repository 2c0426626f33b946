#include "radiomics/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "radiomics/error.hpp"

namespace radiomics {

namespace {

// Regularised upper incomplete gamma Q(a, x): series below a+1, Lentz
// continued fraction above.
double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    constexpr double eps = 1e-16;
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps) break;
        }
        return 1.0 - sum * std::exp(log_prefix);
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::exp(log_prefix) * h;
}

}  // namespace

void PatientRecord::validate() const {
    if (!std::isfinite(os_months) || os_months <= 0.0)
        throw Error(ErrorCode::InvalidArgument, id + ": os_months must be finite and > 0");
    if (event != 0 && event != 1) throw Error(ErrorCode::InvalidArgument, id + ": event must be 0 or 1");
}

double KmCurve::survival_at(double t) const {
    double s = 1.0;
    for (const auto& step : steps) {
        if (step.time > t) break;
        s = step.survival;
    }
    return s;
}

std::vector<double> impute_censored(std::span<const PatientRecord> records) {
    std::vector<double> deaths;
    for (const auto& r : records)
        if (r.event == 1) deaths.push_back(r.os_months);
    if (deaths.empty()) throw Error(ErrorCode::NoEvents, "imputation needs at least one uncensored record");
    std::sort(deaths.begin(), deaths.end());

    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.event == 1) {
            out.push_back(r.os_months);
            continue;
        }
        auto first = std::lower_bound(deaths.begin(), deaths.end(), r.os_months);
        if (first == deaths.end()) {
            out.push_back(r.os_months);
            continue;
        }
        double sum = 0.0;
        for (auto it = first; it != deaths.end(); ++it) sum += *it;
        out.push_back(sum / static_cast<double>(deaths.end() - first));
    }
    return out;
}

MedianSplit median_split(std::span<const double> times) {
    if (times.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty list");
    std::vector<double> sorted(times.begin(), times.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    MedianSplit out;
    out.median = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    out.labels.reserve(n);
    for (double t : times) out.labels.push_back(t <= out.median ? 0 : 1);
    return out;
}

KmCurve km_estimate(std::span<const SurvivalObservation> group) {
    if (group.empty()) throw Error(ErrorCode::InvalidArgument, "Kaplan-Meier needs a nonempty group");
    // time -> (deaths, leaving)
    std::map<double, std::pair<int, int>> table;
    for (const auto& o : group) {
        auto& row = table[o.time];
        row.first += o.event ? 1 : 0;
        row.second += 1;
    }
    KmCurve curve;
    curve.subjects = static_cast<int>(group.size());
    int at_risk = curve.subjects;
    double s = 1.0;
    for (const auto& [time, row] : table) {
        const auto [deaths, leaving] = row;
        if (deaths > 0) {
            s *= 1.0 - static_cast<double>(deaths) / at_risk;
            curve.steps.push_back({time, at_risk, deaths, s});
            if (!curve.median_survival && s <= 0.5) curve.median_survival = time;
        }
        at_risk -= leaving;
    }
    return curve;
}

SurvivalTestResult logrank_test(std::span<const SurvivalObservation> group_a,
                                std::span<const SurvivalObservation> group_b) {
    if (group_a.empty() || group_b.empty()) throw Error(ErrorCode::InvalidArgument, "log-rank needs two nonempty groups");
    struct Counts {
        int deaths_a = 0, deaths = 0, leave_a = 0, leave = 0;
    };
    std::map<double, Counts> table;
    for (const auto& o : group_a) {
        auto& c = table[o.time];
        c.deaths_a += o.event;
        c.deaths += o.event;
        c.leave_a += 1;
        c.leave += 1;
    }
    for (const auto& o : group_b) {
        auto& c = table[o.time];
        c.deaths += o.event;
        c.leave += 1;
    }

    SurvivalTestResult r;
    double n_a = static_cast<double>(group_a.size());
    double n = n_a + static_cast<double>(group_b.size());
    double total_deaths = 0.0;
    for (const auto& [time, c] : table) {
        if (c.deaths > 0) {
            const double d = c.deaths;
            const double frac = n_a / n;
            r.observed_a += c.deaths_a;
            r.expected_a += d * frac;
            if (n > 1.0) r.variance += d * frac * (1.0 - frac) * (n - d) / (n - 1.0);
            total_deaths += d;
        }
        n_a -= c.leave_a;
        n -= c.leave;
    }
    if (total_deaths == 0.0) throw Error(ErrorCode::NoEvents, "log-rank needs at least one event");
    r.observed_b = total_deaths - r.observed_a;
    r.expected_b = total_deaths - r.expected_a;

    const double diff = r.observed_a - r.expected_a;
    r.chi2 = r.variance > 0.0 ? diff * diff / r.variance : 0.0;
    r.p_value = chi2_sf(r.chi2, 1);

    if (r.expected_a > 0.0 && r.expected_b > 0.0 && r.observed_a > 0.0 && r.observed_b > 0.0) {
        const double hr = (r.observed_a / r.expected_a) / (r.observed_b / r.expected_b);
        const double half_width = 1.96 * std::sqrt(1.0 / r.expected_a + 1.0 / r.expected_b);
        r.hazard_ratio = hr;
        r.ci_low = std::exp(std::log(hr) - half_width);
        r.ci_high = std::exp(std::log(hr) + half_width);
    }
    r.median_a = km_estimate(group_a).median_survival;
    r.median_b = km_estimate(group_b).median_survival;
    return r;
}

double chi2_sf(double x, int df) {
    if (!(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "chi-square statistic must be >= 0");
    if (df < 1) throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be >= 1");
    const double q = df == 1 ? std::erfc(std::sqrt(x / 2.0)) : gamma_q(df / 2.0, x / 2.0);
    // Keep p strictly positive even when the tail underflows.
    return std::clamp(q, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace radiomics
