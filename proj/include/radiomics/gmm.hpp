#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radiomics/cnn.hpp"
#include "radiomics/volume.hpp"

namespace radiomics {

struct GmmComponent {
    double mu = 0.0;
    double sigma2 = 1.0;
    double omega = 1.0;

    friend bool operator==(const GmmComponent&, const GmmComponent&) = default;
};

struct GmmFit {
    std::vector<GmmComponent> components;  // ascending mu, ties by descending omega
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> log_likelihood_trace;  // one entry per EM iteration, starting at the initial guess

    friend bool operator==(const GmmFit&, const GmmFit&) = default;
};

struct EmOptions {
    double tolerance = 1e-8;
    int max_iterations = 500;
};

/// In-ROI activation values of `map`. Order follows voxel order but callers
/// must not depend on it.
std::vector<double> collect_samples(const Volume3D& map, const RoiMask& mask);

/// 1-D Gaussian mixture by expectation maximisation with quantile
/// initialisation. `seed` is accepted for API stability; the initialiser is
/// deterministic so it currently has no effect on the result.
GmmFit em_fit(std::span<const double> samples, int k, std::uint64_t seed, const EmOptions& options = {});

/// EM from caller-supplied starting components. The start is put in canonical
/// order first, so any permutation of the same start gives the same fit.
GmmFit em_fit_from(std::span<const double> samples, std::vector<GmmComponent> start, const EmOptions& options = {});

/// max(1e-6 * range^2, 1e-12).
double variance_floor(std::span<const double> samples);

/// Mixture density at x.
double gmm_density(const std::vector<GmmComponent>& components, double x);

/// Pairwise (cascade) summation, used wherever sums feed EM updates.
double pairwise_sum(std::span<const double> values);

enum class ModalityReduction { Mean, Concat };

std::string_view to_string(ModalityReduction r);
ModalityReduction reduction_from_string(std::string_view s);

struct FeatureVector {
    std::string patient_id;
    std::vector<double> values;
    std::vector<std::string> names;
    ModalityReduction reduction = ModalityReduction::Mean;
};

/// Column names for one modality: f000_mu1, f000_s1, f000_w1, f000_mu2, ...
std::vector<std::string> feature_names(int k, const std::string& prefix = "");

/// Fit every one of the 21 maps within its ROI and lay the sorted
/// (mu, sigma2, omega) triples out map-major.
FeatureVector build_feature_vector(const ActivationSet& acts, int k, std::uint64_t seed);

/// Mean keeps the single-modality layout; concat prefixes each block with
/// its modality tag (tags.size() must match vectors.size()).
FeatureVector reduce_modalities(std::span<const FeatureVector> vectors, ModalityReduction mode,
                                std::span<const std::string> tags = {});

}  // namespace radiomics
