#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "radiomics/cohort.hpp"
#include "radiomics/volume.hpp"

namespace radiomics {

/// Seeded cohort with a planted texture -> survival link. Half the patients
/// carry fine-grained (white) tumour texture and short survival, the other
/// half coarse-grained (smoothed) texture with the same mean and variance
/// and long survival.
struct SyntheticOptions {
    int patients = 5;
    std::uint64_t seed = 7;
    Dims dims{40, 40, 32};
    Spacing spacing{1.25, 1.25, 1.5};
    double radius_mm = 14.0;
    std::vector<Modality> sequences{Modality::T1WI, Modality::T1CE, Modality::T2WI, Modality::FLAIR};
    int smoothing_radius = 2;
};

enum class TextureFamily { Fine = 0, Coarse = 1 };

struct SyntheticPatient {
    std::string id;
    TextureFamily family;
};

struct SyntheticCohort {
    CohortManifest manifest;
    std::filesystem::path manifest_path;
    std::vector<SyntheticPatient> patients;
};

/// Writes volumes, masks and manifest.csv under `dir`.
SyntheticCohort write_synthetic_cohort(const std::filesystem::path& dir, const SyntheticOptions& options);

/// Gaussian texture field with the given mean/sd; Coarse is box-smoothed
/// before being rescaled to the same first-order statistics.
std::vector<float> texture_field(TextureFamily family, const Dims& dims, double mean, double sd, int smoothing_radius,
                                 std::mt19937_64& rng);

/// Standard normal draw independent of the standard library's distributions.
double standard_normal(std::mt19937_64& rng);
double unit_uniform(std::mt19937_64& rng);

}  // namespace radiomics
