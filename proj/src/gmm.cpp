#include "radiomics/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "radiomics/error.hpp"
#include "radiomics/parallel.hpp"

namespace radiomics {

namespace {

constexpr double kSurplusWeight = 1e-6;

// Linear-interpolation sample quantile of already sorted data.
double sorted_quantile(std::span<const double> sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void sort_components(std::vector<GmmComponent>& cs) {
    std::stable_sort(cs.begin(), cs.end(), [](const GmmComponent& a, const GmmComponent& b) {
        if (a.mu != b.mu) return a.mu < b.mu;
        if (a.omega != b.omega) return a.omega > b.omega;
        return a.sigma2 < b.sigma2;
    });
}

// Responsibilities (component-major, n per component) and the total
// log-likelihood of the current parameters.
double expectation(std::span<const double> x, const std::vector<GmmComponent>& cs, std::vector<double>& resp,
                   std::vector<double>& scratch) {
    const std::size_t n = x.size(), k = cs.size();
    std::vector<double> log_norm(k), inv_two_var(k);
    for (std::size_t j = 0; j < k; ++j) {
        log_norm[j] = std::log(cs[j].omega) - 0.5 * std::log(2.0 * std::numbers::pi * cs[j].sigma2);
        inv_two_var[j] = 0.5 / cs[j].sigma2;
    }
    resp.resize(n * k);
    scratch.resize(n);
    std::vector<double> lp(k);
    for (std::size_t i = 0; i < n; ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
            const double d = x[i] - cs[j].mu;
            lp[j] = log_norm[j] - d * d * inv_two_var[j];
            top = std::max(top, lp[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            lp[j] = std::exp(lp[j] - top);
            total += lp[j];
        }
        for (std::size_t j = 0; j < k; ++j) resp[j * n + i] = lp[j] / total;
        scratch[i] = top + std::log(total);
    }
    return pairwise_sum(scratch);
}

void maximization(std::span<const double> x, const std::vector<double>& resp, std::vector<GmmComponent>& cs,
                  double floor, std::vector<double>& scratch) {
    const std::size_t n = x.size();
    for (std::size_t j = 0; j < cs.size(); ++j) {
        std::span<const double> r(resp.data() + j * n, n);
        const double nj = pairwise_sum(r);
        if (!(nj > 0.0)) {
            cs[j].omega = 0.0;
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) scratch[i] = r[i] * x[i];
        const double mu = pairwise_sum(scratch) / nj;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i] - mu;
            scratch[i] = r[i] * d * d;
        }
        cs[j].mu = mu;
        cs[j].sigma2 = std::max(pairwise_sum(scratch) / nj, floor);
        cs[j].omega = nj / static_cast<double>(n);
    }
    double total = 0.0;
    for (const auto& c : cs) total += c.omega;
    for (auto& c : cs) c.omega /= total;
}

GmmFit run_em(std::span<const double> x, std::vector<GmmComponent> cs, double floor, const EmOptions& options) {
    sort_components(cs);
    for (auto& c : cs) c.sigma2 = std::max(c.sigma2, floor);

    GmmFit fit;
    std::vector<double> resp, scratch;
    double ll_prev = expectation(x, cs, resp, scratch);
    fit.log_likelihood_trace.push_back(ll_prev);
    for (int it = 1; it <= options.max_iterations; ++it) {
        maximization(x, resp, cs, floor, scratch);
        const double ll = expectation(x, cs, resp, scratch);
        fit.log_likelihood_trace.push_back(ll);
        fit.iterations = it;
        const double gain = ll - ll_prev;
        ll_prev = ll;
        if (gain < options.tolerance) {
            fit.converged = true;
            break;
        }
    }
    fit.log_likelihood = fit.log_likelihood_trace.back();

    // A component that lost all responsibility keeps a token weight so every
    // omega stays in (0, 1].
    bool starved = false;
    for (auto& c : cs) {
        if (c.omega <= 0.0) {
            c.omega = kSurplusWeight;
            starved = true;
        }
    }
    if (starved) {
        double total = 0.0;
        for (const auto& c : cs) total += c.omega;
        for (auto& c : cs) c.omega /= total;
    }
    sort_components(cs);
    fit.components = std::move(cs);
    return fit;
}

}  // namespace

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double variance_floor(std::span<const double> samples) {
    if (samples.empty()) return 1e-12;
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    const double range = *hi - *lo;
    return std::max(1e-6 * range * range, 1e-12);
}

double gmm_density(const std::vector<GmmComponent>& components, double x) {
    double p = 0.0;
    for (const auto& c : components) {
        const double d = x - c.mu;
        p += c.omega * std::exp(-0.5 * d * d / c.sigma2) / std::sqrt(2.0 * std::numbers::pi * c.sigma2);
    }
    return p;
}

std::vector<double> collect_samples(const Volume3D& map, const RoiMask& mask) {
    if (map.dims() != mask.dims()) throw Error(ErrorCode::ShapeMismatch, "map and mask dims differ");
    std::vector<double> out;
    auto data = map.data();
    auto vox = mask.voxels();
    for (std::size_t i = 0; i < data.size(); ++i)
        if (vox[i]) out.push_back(data[i]);
    if (out.empty()) throw Error(ErrorCode::EmptyMask, "mask selects no voxels");
    return out;
}

GmmFit em_fit_from(std::span<const double> samples, std::vector<GmmComponent> start, const EmOptions& options) {
    if (samples.empty()) throw Error(ErrorCode::EmptySamples, "em_fit needs at least one sample");
    if (start.empty()) throw Error(ErrorCode::InvalidK, "at least one starting component required");
    return run_em(samples, std::move(start), variance_floor(samples), options);
}

GmmFit em_fit(std::span<const double> samples, int k, std::uint64_t /*seed*/, const EmOptions& options) {
    if (samples.empty()) throw Error(ErrorCode::EmptySamples, "em_fit needs at least one sample");
    if (k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1, got " + std::to_string(k));

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    const double floor = variance_floor(samples);
    const int fitted = std::min<int>(k, static_cast<int>(distinct.size()));

    const double mean = pairwise_sum(sorted) / static_cast<double>(sorted.size());
    std::vector<double> dev(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) dev[i] = (sorted[i] - mean) * (sorted[i] - mean);
    const double var = pairwise_sum(dev) / static_cast<double>(sorted.size());

    auto place = [&](std::span<const double> source) {
        std::vector<GmmComponent> cs(static_cast<std::size_t>(fitted));
        for (int j = 0; j < fitted; ++j)
            cs[static_cast<std::size_t>(j)] = {sorted_quantile(source, (j + 0.5) / fitted), std::max(var, floor),
                                               1.0 / fitted};
        return cs;
    };
    auto start = place(sorted);
    // Heavy ties (e.g. a spike of zeros after ReLU) can put two starting means
    // on the same value, which EM can never separate; place on the distinct
    // values instead.
    for (std::size_t j = 1; j < start.size(); ++j) {
        if (start[j].mu == start[j - 1].mu) {
            start = place(distinct);
            break;
        }
    }

    GmmFit fit = run_em(samples, std::move(start), floor, options);
    if (fitted < k) {
        for (int j = fitted; j < k; ++j) fit.components.push_back({distinct.back(), floor, kSurplusWeight});
        double total = 0.0;
        for (const auto& c : fit.components) total += c.omega;
        for (auto& c : fit.components) c.omega /= total;
        sort_components(fit.components);
    }
    return fit;
}

std::string_view to_string(ModalityReduction r) { return r == ModalityReduction::Mean ? "mean" : "concat"; }

ModalityReduction reduction_from_string(std::string_view s) {
    if (s == "mean") return ModalityReduction::Mean;
    if (s == "concat") return ModalityReduction::Concat;
    throw Error(ErrorCode::InvalidArgument, "modality_reduction must be 'mean' or 'concat'");
}

std::vector<std::string> feature_names(int k, const std::string& prefix) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(3 * k * kMapCount));
    char buf[64];
    for (int m = 0; m < kMapCount; ++m)
        for (int j = 1; j <= k; ++j)
            for (const char* param : {"mu", "s", "w"}) {
                std::snprintf(buf, sizeof buf, "f%03d_%s%d", m, param, j);
                names.push_back(prefix + buf);
            }
    return names;
}

FeatureVector build_feature_vector(const ActivationSet& acts, int k, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1");
    std::vector<GmmFit> fits(kMapCount);
    parallel_for(kMapCount, [&](std::size_t m) {
        const int index = static_cast<int>(m);
        auto samples = collect_samples(acts.map(index), acts.mask_for(index));
        fits[m] = em_fit(samples, k, seed);
    });
    FeatureVector fv;
    fv.values.reserve(static_cast<std::size_t>(3 * k * kMapCount));
    for (const auto& fit : fits)
        for (const auto& c : fit.components) fv.values.insert(fv.values.end(), {c.mu, c.sigma2, c.omega});
    fv.names = feature_names(k);
    return fv;
}

FeatureVector reduce_modalities(std::span<const FeatureVector> vectors, ModalityReduction mode,
                                std::span<const std::string> tags) {
    if (vectors.empty()) throw Error(ErrorCode::InvalidArgument, "no feature vectors to reduce");
    const std::size_t len = vectors.front().values.size();
    for (const auto& v : vectors)
        if (v.values.size() != len) throw Error(ErrorCode::LengthMismatch, "feature vectors differ in length");

    FeatureVector out;
    out.patient_id = vectors.front().patient_id;
    out.reduction = mode;
    if (mode == ModalityReduction::Mean) {
        out.values.assign(len, 0.0);
        std::vector<double> column(vectors.size());
        for (std::size_t i = 0; i < len; ++i) {
            for (std::size_t m = 0; m < vectors.size(); ++m) column[m] = vectors[m].values[i];
            out.values[i] = pairwise_sum(column) / static_cast<double>(vectors.size());
        }
        out.names = vectors.front().names;
        return out;
    }
    if (!tags.empty() && tags.size() != vectors.size())
        throw Error(ErrorCode::LengthMismatch, "one modality tag per vector required");
    for (std::size_t m = 0; m < vectors.size(); ++m) {
        const std::string tag = tags.empty() ? "m" + std::to_string(m) : tags[m];
        out.values.insert(out.values.end(), vectors[m].values.begin(), vectors[m].values.end());
        for (std::size_t i = 0; i < len; ++i) {
            const std::string base = i < vectors[m].names.size() ? vectors[m].names[i] : "v" + std::to_string(i);
            out.names.push_back(tag + "_" + base);
        }
    }
    return out;
}

}  // namespace radiomics
