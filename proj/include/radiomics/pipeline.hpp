#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radiomics/classifier.hpp"
#include "radiomics/cnn.hpp"
#include "radiomics/cohort.hpp"
#include "radiomics/csv.hpp"
#include "radiomics/gmm.hpp"
#include "radiomics/survival.hpp"

namespace radiomics {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

// ---- extract ---------------------------------------------------------------

/// Resample -> standardise -> crop to 64^3 -> CNN -> per-map GMM.
FeatureVector extract_sequence(const Volume3D& volume, const RoiMask& mask, const CnnWeights& weights,
                               const RunConfig& config);

/// All listed sequences of one patient, reduced per config.
FeatureVector extract_patient(const CohortRow& row, const CnnWeights& weights, const RunConfig& config);

struct ExtractResult {
    CsvTable features;  // patient_id + one column per feature, manifest order
    std::vector<std::pair<std::string, std::string>> failures;  // (patient_id, reason)
    int exit_code = kExitOk;
};

ExtractResult run_extract(const CohortManifest& manifest, const CnnWeights& weights, const RunConfig& config);

/// Writes <out>/features.csv.
ExtractResult cmd_extract(const std::filesystem::path& manifest_path, const std::filesystem::path& weights_path,
                          const RunConfig& config, const std::filesystem::path& out_dir);

// ---- classify --------------------------------------------------------------

enum class Target { MacrophageM1, Neutrophils, Tfh, Survival };

Target target_from_string(std::string_view s);
std::string_view to_string(Target t);

/// R = deep features, C = age + gender, I = immune fractions.
struct FeatureSet {
    std::string name;
    bool radiomic = false;
    bool clinical = false;
    bool immune = false;
};

FeatureSet parse_feature_set(const std::string& name);
/// File-name friendly form: "R+C+I" -> "R_C_I".
std::string feature_set_slug(const std::string& name);

struct Cohort {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> radiomic;
    std::vector<std::string> radiomic_names;
    std::vector<PatientRecord> records;
};

/// Patients present in both the features table and the manifest, in
/// features-table order.
Cohort join_cohort(const CsvTable& features, const CohortManifest& manifest);

/// Binary labels by median split of the target (survival times imputed
/// first). Throws DegenerateLabels if only one class results.
std::vector<int> target_labels(const Cohort& cohort, Target target);

/// Columns in R, C, I order. When the target is an immune marker, that
/// marker is left out of I.
Dataset design_matrix(const Cohort& cohort, const FeatureSet& set, Target target, const std::vector<int>& labels);

struct ClassifyOutcome {
    std::vector<std::string> feature_sets;
    std::vector<EvalReport> reports;
    std::vector<std::size_t> dims;
};

ClassifyOutcome run_classify(const Cohort& cohort, Target target, const RunConfig& config);

/// Writes <out>/<target>_<set>_report.json, <out>/<target>_<set>_roc.csv and
/// <out>/<target>_summary.csv.
ClassifyOutcome cmd_classify(const std::filesystem::path& features_path, const std::filesystem::path& manifest_path,
                             Target target, const RunConfig& config, const std::filesystem::path& out_dir);

// ---- survive ---------------------------------------------------------------

struct SurvivalRow {
    std::string feature_set;
    double auc = 0.5;
    KmCurve short_term;
    KmCurve long_term;
    std::optional<SurvivalTestResult> test;  // absent when a predicted group is empty
};

/// Groups come from the LOOCV predictions (score >= 0.5 is long-term), not
/// from the true labels.
std::vector<SurvivalRow> run_survive(const Cohort& cohort, const RunConfig& config);

/// Writes survival_table.csv plus per-set KM CSV/SVG and log-rank JSON.
std::vector<SurvivalRow> cmd_survive(const std::filesystem::path& features_path,
                                     const std::filesystem::path& manifest_path, const RunConfig& config,
                                     const std::filesystem::path& out_dir);

CsvTable survival_table(const std::vector<SurvivalRow>& rows);

// ---- inspect ---------------------------------------------------------------

struct InspectResult {
    std::vector<double> samples;
    GmmFit fit;
    std::filesystem::path histogram_svg;
    std::filesystem::path histogram_csv;
    std::filesystem::path slice_pgm;
};

/// Histogram + fitted mixture + central axial slice of one activation map.
/// `sequence` picks the MRI sequence; empty means the first one listed.
InspectResult cmd_inspect(const std::filesystem::path& manifest_path, const std::filesystem::path& weights_path,
                          const std::string& patient_id, int map_index, const RunConfig& config,
                          const std::filesystem::path& out_dir, const std::string& sequence = "");

InspectResult inspect_activation(const ActivationSet& acts, int map_index, const RunConfig& config,
                                 const std::filesystem::path& out_dir, const std::string& stem);

}  // namespace radiomics
