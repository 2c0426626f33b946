#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "radiomics/classifier.hpp"
#include "radiomics/gmm.hpp"
#include "radiomics/survival.hpp"
#include "radiomics/volume.hpp"

namespace radiomics {

inline constexpr std::array<Modality, 4> kSequences{Modality::T1WI, Modality::T1CE, Modality::T2WI, Modality::FLAIR};
/// Manifest column order, fixed.
inline constexpr std::array<const char*, 13> kManifestColumns{
    "patient_id", "t1wi", "t1ce", "t2wi", "flair", "mask", "age",
    "gender", "os_months", "event", "macrophage_m1", "neutrophils", "tfh"};

struct CohortRow {
    PatientRecord record;
    std::array<std::optional<std::filesystem::path>, 4> volumes;  // kSequences order; empty cell = not acquired
    std::filesystem::path mask;
};

struct CohortManifest {
    std::vector<CohortRow> rows;

    const CohortRow& find(const std::string& patient_id) const;  // throws UnknownPatient
    std::vector<PatientRecord> records() const;
};

/// Structural validation happens here and is fatal (ManifestInvalid).
/// Relative paths resolve against the manifest's directory.
CohortManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const CohortManifest& manifest, const std::filesystem::path& path);

/// Referenced files that do not exist, one entry per missing path.
std::vector<std::string> missing_files(const CohortRow& row);

struct RunConfig {
    int k = 2;
    std::uint64_t seed = 42;
    HyperparamGrid grid;
    ModalityReduction modality_reduction = ModalityReduction::Mean;
    std::vector<std::string> feature_sets{"R", "C", "I", "I+C", "R+C", "R+I", "R+C+I"};
    std::filesystem::path output_dir = "out";
    double target_mm = 1.0;

    void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text);

}  // namespace radiomics
