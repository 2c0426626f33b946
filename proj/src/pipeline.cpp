#include "radiomics/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iostream>

#include "radiomics/error.hpp"
#include "radiomics/parallel.hpp"
#include "radiomics/reports.hpp"

namespace radiomics {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

ActivationSet activations_for(const Volume3D& volume, const RoiMask& mask, const CnnWeights& weights,
                              const RunConfig& config) {
    if (volume.dims() != mask.dims()) throw Error(ErrorCode::ShapeMismatch, "volume and mask dims differ");
    // The mask lives on the volume's grid, whatever its own sidecar says.
    const RoiMask aligned(mask.dims(), std::vector<std::uint8_t>(mask.voxels().begin(), mask.voxels().end()),
                          volume.spacing());
    if (aligned.empty()) throw Error(ErrorCode::EmptyMask, "mask has no foreground voxels");
    const Volume3D iso = standardize_intensity(resample_isotropic(volume, config.target_mm));
    const RoiMask iso_mask = resample_mask_isotropic(aligned, config.target_mm);
    if (iso_mask.empty()) throw Error(ErrorCode::EmptyMask, "mask vanished after resampling");
    const CnnInput input = extract_cnn_input(iso, iso_mask);
    return forward(input.image, input.mask, weights);
}

std::vector<std::string> extract_header(const RunConfig& config) {
    std::vector<std::string> header{"patient_id"};
    if (config.modality_reduction == ModalityReduction::Mean) {
        auto names = feature_names(config.k);
        header.insert(header.end(), names.begin(), names.end());
    } else {
        for (Modality m : kSequences) {
            auto names = feature_names(config.k, lower(to_string(m)) + "_");
            header.insert(header.end(), names.begin(), names.end());
        }
    }
    return header;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<SurvivalObservation> observations(const Cohort& cohort, const std::vector<std::size_t>& idx) {
    std::vector<SurvivalObservation> out;
    for (auto i : idx) out.push_back({cohort.records[i].os_months, cohort.records[i].event});
    return out;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

CnnWeights require_weights(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::WeightsMissing, path.string());
    return load_weights(path);
}

}  // namespace

FeatureVector extract_sequence(const Volume3D& volume, const RoiMask& mask, const CnnWeights& weights,
                               const RunConfig& config) {
    return build_feature_vector(activations_for(volume, mask, weights, config), config.k, config.seed);
}

FeatureVector extract_patient(const CohortRow& row, const CnnWeights& weights, const RunConfig& config) {
    const RoiMask mask = load_mask(row.mask);
    std::vector<FeatureVector> per_sequence;
    std::vector<std::string> tags;
    for (std::size_t s = 0; s < kSequences.size(); ++s) {
        if (!row.volumes[s]) continue;
        per_sequence.push_back(extract_sequence(load_volume(*row.volumes[s]), mask, weights, config));
        tags.push_back(lower(to_string(kSequences[s])));
    }
    if (config.modality_reduction == ModalityReduction::Concat && per_sequence.size() != kSequences.size())
        throw Error(ErrorCode::LengthMismatch, "concat reduction needs all four sequences");
    FeatureVector fv = reduce_modalities(per_sequence, config.modality_reduction, tags);
    fv.patient_id = row.record.id;
    return fv;
}

ExtractResult run_extract(const CohortManifest& manifest, const CnnWeights& weights, const RunConfig& config) {
    config.validate();
    const std::size_t n = manifest.rows.size();
    std::vector<std::optional<FeatureVector>> results(n);
    std::vector<std::string> errors(n);
    parallel_for(n, [&](std::size_t i) {
        const auto& row = manifest.rows[i];
        try {
            if (auto missing = missing_files(row); !missing.empty()) {
                errors[i] = "missing file " + missing.front();
                return;
            }
            results[i] = extract_patient(row, weights, config);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    ExtractResult out;
    out.features.header = extract_header(config);
    for (std::size_t i = 0; i < n; ++i) {
        if (!results[i]) {
            out.failures.emplace_back(manifest.rows[i].record.id, errors[i]);
            continue;
        }
        std::vector<std::string> cells{results[i]->patient_id};
        for (double v : results[i]->values) cells.push_back(format_number(v));
        out.features.rows.push_back(std::move(cells));
    }
    if (out.failures.empty())
        out.exit_code = kExitOk;
    else
        out.exit_code = out.features.rows.empty() ? kExitFatal : kExitPartial;
    return out;
}

ExtractResult cmd_extract(const std::filesystem::path& manifest_path, const std::filesystem::path& weights_path,
                          const RunConfig& config, const std::filesystem::path& out_dir) {
    const CohortManifest manifest = load_manifest(manifest_path);
    const CnnWeights weights = require_weights(weights_path);
    ExtractResult result = run_extract(manifest, weights, config);
    ensure_dir(out_dir);
    write_csv(result.features, out_dir / "features.csv");
    for (const auto& [id, reason] : result.failures) std::cerr << "extract: skipped " << id << ": " << reason << "\n";
    return result;
}

Target target_from_string(std::string_view s) {
    const std::string t = lower(s);
    if (t == "m1" || t == "macrophage_m1") return Target::MacrophageM1;
    if (t == "neutrophils") return Target::Neutrophils;
    if (t == "tfh") return Target::Tfh;
    if (t == "survival") return Target::Survival;
    throw Error(ErrorCode::MissingColumn, "unknown target '" + std::string(s) + "'");
}

std::string_view to_string(Target t) {
    switch (t) {
        case Target::MacrophageM1: return "m1";
        case Target::Neutrophils: return "neutrophils";
        case Target::Tfh: return "tfh";
        case Target::Survival: return "survival";
    }
    return "survival";
}

FeatureSet parse_feature_set(const std::string& name) {
    FeatureSet fs;
    fs.name = name;
    std::size_t start = 0;
    while (start <= name.size()) {
        const std::size_t end = std::min(name.find('+', start), name.size());
        const std::string part = name.substr(start, end - start);
        if (part == "R")
            fs.radiomic = true;
        else if (part == "C")
            fs.clinical = true;
        else if (part == "I")
            fs.immune = true;
        else
            throw Error(ErrorCode::InvalidArgument, "feature set '" + name + "': unknown block '" + part + "'");
        start = end + 1;
    }
    return fs;
}

std::string feature_set_slug(const std::string& name) {
    std::string s = name;
    std::replace(s.begin(), s.end(), '+', '_');
    return s;
}

Cohort join_cohort(const CsvTable& features, const CohortManifest& manifest) {
    if (features.header.empty() || features.header.front() != "patient_id")
        throw Error(ErrorCode::MissingColumn, "features table must start with patient_id");
    Cohort c;
    c.radiomic_names.assign(features.header.begin() + 1, features.header.end());
    for (const auto& row : features.rows) {
        const CohortRow* match = nullptr;
        for (const auto& m : manifest.rows)
            if (m.record.id == row.front()) match = &m;
        if (!match) {
            std::cerr << "join: " << row.front() << " has features but no manifest row; ignored\n";
            continue;
        }
        std::vector<double> values;
        for (std::size_t i = 1; i < row.size(); ++i) values.push_back(parse_number(row[i]));
        c.ids.push_back(row.front());
        c.radiomic.push_back(std::move(values));
        c.records.push_back(match->record);
    }
    return c;
}

std::vector<int> target_labels(const Cohort& cohort, Target target) {
    std::vector<double> values;
    if (target == Target::Survival) {
        values = impute_censored(cohort.records);
    } else {
        for (const auto& r : cohort.records)
            values.push_back(target == Target::MacrophageM1 ? r.macrophage_m1
                                                            : (target == Target::Neutrophils ? r.neutrophils : r.tfh));
    }
    if (values.empty()) throw Error(ErrorCode::DegenerateLabels, "no patients");
    auto split = median_split(values);
    const bool has0 = std::count(split.labels.begin(), split.labels.end(), 0) > 0;
    const bool has1 = std::count(split.labels.begin(), split.labels.end(), 1) > 0;
    if (!has0 || !has1) throw Error(ErrorCode::DegenerateLabels, "median split of target yields a single class");
    return split.labels;
}

Dataset design_matrix(const Cohort& cohort, const FeatureSet& set, Target target, const std::vector<int>& labels) {
    Dataset d;
    d.ids = cohort.ids;
    d.labels = labels;
    if (set.radiomic) d.feature_names = cohort.radiomic_names;
    if (set.clinical) d.feature_names.insert(d.feature_names.end(), {"age", "gender"});
    std::vector<std::pair<std::string, double PatientRecord::*>> immune;
    if (set.immune) {
        if (target != Target::MacrophageM1) immune.emplace_back("macrophage_m1", &PatientRecord::macrophage_m1);
        if (target != Target::Neutrophils) immune.emplace_back("neutrophils", &PatientRecord::neutrophils);
        if (target != Target::Tfh) immune.emplace_back("tfh", &PatientRecord::tfh);
        for (const auto& [name, member] : immune) d.feature_names.push_back(name);
    }
    for (std::size_t i = 0; i < cohort.ids.size(); ++i) {
        std::vector<double> row;
        if (set.radiomic) row = cohort.radiomic[i];
        const auto& rec = cohort.records[i];
        if (set.clinical) row.insert(row.end(), {rec.age, static_cast<double>(rec.gender)});
        for (const auto& [name, member] : immune) row.push_back(rec.*member);
        d.rows.push_back(std::move(row));
    }
    return d;
}

ClassifyOutcome run_classify(const Cohort& cohort, Target target, const RunConfig& config) {
    config.validate();
    const auto labels = target_labels(cohort, target);
    ClassifyOutcome out;
    for (const auto& name : config.feature_sets) {
        const Dataset d = design_matrix(cohort, parse_feature_set(name), target, labels);
        out.feature_sets.push_back(name);
        out.dims.push_back(d.dims());
        out.reports.push_back(loocv(d, config.grid, config.seed));
    }
    return out;
}

namespace {

void write_eval_files(const std::filesystem::path& out_dir, const std::string& prefix, const EvalReport& report) {
    write_json(out_dir / (prefix + "_report.json"), report_to_json(report));
    std::vector<ScoredLabel> scored;
    for (const auto& s : report.scores) scored.push_back({s.score, s.label});
    write_csv(roc_table(roc_curve(scored)), out_dir / (prefix + "_roc.csv"));
}

}  // namespace

ClassifyOutcome cmd_classify(const std::filesystem::path& features_path, const std::filesystem::path& manifest_path,
                             Target target, const RunConfig& config, const std::filesystem::path& out_dir) {
    const Cohort cohort = join_cohort(read_csv(features_path), load_manifest(manifest_path));
    ClassifyOutcome outcome = run_classify(cohort, target, config);
    ensure_dir(out_dir);
    const std::string tname(to_string(target));
    CsvTable summary;
    summary.header = {"feature_set", "n", "dims", "auc", "accuracy", "tn", "fp", "fn", "tp"};
    for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
        const auto& r = outcome.reports[i];
        write_eval_files(out_dir, tname + "_" + feature_set_slug(outcome.feature_sets[i]), r);
        summary.rows.push_back({outcome.feature_sets[i], std::to_string(r.scores.size()), std::to_string(outcome.dims[i]),
                                format_number(r.auc), format_number(r.accuracy), std::to_string(r.confusion.tn),
                                std::to_string(r.confusion.fp), std::to_string(r.confusion.fn),
                                std::to_string(r.confusion.tp)});
    }
    write_csv(summary, out_dir / (tname + "_summary.csv"));
    return outcome;
}

std::vector<SurvivalRow> run_survive(const Cohort& cohort, const RunConfig& config) {
    const ClassifyOutcome classified = run_classify(cohort, Target::Survival, config);
    std::vector<SurvivalRow> rows;
    for (std::size_t s = 0; s < classified.reports.size(); ++s) {
        const auto& report = classified.reports[s];
        std::vector<std::size_t> short_idx, long_idx;
        for (std::size_t i = 0; i < report.scores.size(); ++i)
            (report.scores[i].score >= 0.5 ? long_idx : short_idx).push_back(i);
        SurvivalRow row;
        row.feature_set = classified.feature_sets[s];
        row.auc = report.auc;
        const auto short_obs = observations(cohort, short_idx);
        const auto long_obs = observations(cohort, long_idx);
        if (!short_obs.empty()) row.short_term = km_estimate(short_obs);
        if (!long_obs.empty()) row.long_term = km_estimate(long_obs);
        if (!short_obs.empty() && !long_obs.empty()) row.test = logrank_test(short_obs, long_obs);
        rows.push_back(std::move(row));
    }
    return rows;
}

CsvTable survival_table(const std::vector<SurvivalRow>& rows) {
    CsvTable t;
    t.header = {"feature_set", "median_short", "median_long", "hr", "ci_low", "ci_high", "p_value", "auc"};
    for (const auto& r : rows) {
        if (!r.test) {
            t.rows.push_back({r.feature_set, optional_cell(r.short_term.median_survival),
                              optional_cell(r.long_term.median_survival), "NA", "NA", "NA", "NA", format_number(r.auc)});
            continue;
        }
        const auto& x = *r.test;
        t.rows.push_back({r.feature_set, optional_cell(x.median_a), optional_cell(x.median_b), optional_cell(x.hazard_ratio),
                          optional_cell(x.ci_low), optional_cell(x.ci_high), format_number(x.p_value),
                          format_number(r.auc)});
    }
    return t;
}

std::vector<SurvivalRow> cmd_survive(const std::filesystem::path& features_path,
                                     const std::filesystem::path& manifest_path, const RunConfig& config,
                                     const std::filesystem::path& out_dir) {
    const Cohort cohort = join_cohort(read_csv(features_path), load_manifest(manifest_path));
    auto rows = run_survive(cohort, config);
    ensure_dir(out_dir);
    for (const auto& r : rows) {
        const std::string prefix = "survival_" + feature_set_slug(r.feature_set);
        write_csv(km_table(r.short_term), out_dir / (prefix + "_km_short.csv"));
        write_csv(km_table(r.long_term), out_dir / (prefix + "_km_long.csv"));
        write_text(out_dir / (prefix + "_km.svg"), km_svg(r.short_term, r.long_term, "Kaplan-Meier: " + r.feature_set));
        if (r.test)
            write_json(out_dir / (prefix + "_logrank.json"), survival_to_json(*r.test));
        else
            std::cerr << "survive: " << r.feature_set << ": one predicted group is empty, log-rank skipped\n";
    }
    write_csv(survival_table(rows), out_dir / "survival_table.csv");
    return rows;
}

InspectResult inspect_activation(const ActivationSet& acts, int map_index, const RunConfig& config,
                                 const std::filesystem::path& out_dir, const std::string& stem) {
    if (map_index < 0 || map_index >= kMapCount)
        throw Error(ErrorCode::BadMapIndex, std::to_string(map_index) + " is outside [0, 20]");
    InspectResult r;
    const Volume3D& map = acts.map(map_index);
    r.samples = collect_samples(map, acts.mask_for(map_index));
    r.fit = em_fit(r.samples, config.k, config.seed);
    const Histogram h = make_histogram(r.samples, 64);
    ensure_dir(out_dir);
    r.histogram_svg = out_dir / (stem + "_hist.svg");
    r.histogram_csv = out_dir / (stem + "_hist.csv");
    r.slice_pgm = out_dir / (stem + "_slice.pgm");
    write_text(r.histogram_svg, histogram_svg(h, r.fit, r.samples.size(), stem));
    write_csv(histogram_table(h, r.fit, r.samples.size()), r.histogram_csv);
    write_text(r.slice_pgm, slice_pgm(map, map.dims().nz / 2));
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : r.fit.components) comps.push_back({{"mu", c.mu}, {"sigma2", c.sigma2}, {"omega", c.omega}});
    write_json(out_dir / (stem + "_gmm.json"), {{"map", map_index},
                                                {"samples", r.samples.size()},
                                                {"log_likelihood", r.fit.log_likelihood},
                                                {"iterations", r.fit.iterations},
                                                {"converged", r.fit.converged},
                                                {"components", comps}});
    return r;
}

InspectResult cmd_inspect(const std::filesystem::path& manifest_path, const std::filesystem::path& weights_path,
                          const std::string& patient_id, int map_index, const RunConfig& config,
                          const std::filesystem::path& out_dir, const std::string& sequence) {
    if (map_index < 0 || map_index >= kMapCount)
        throw Error(ErrorCode::BadMapIndex, std::to_string(map_index) + " is outside [0, 20]");
    const CohortManifest manifest = load_manifest(manifest_path);
    const CohortRow& row = manifest.find(patient_id);
    const CnnWeights weights = require_weights(weights_path);

    std::optional<std::size_t> chosen;
    for (std::size_t s = 0; s < kSequences.size(); ++s) {
        if (!row.volumes[s]) continue;
        if (sequence.empty() || lower(sequence) == lower(to_string(kSequences[s]))) {
            chosen = s;
            break;
        }
    }
    if (!chosen) throw Error(ErrorCode::InvalidArgument, patient_id + " has no sequence '" + sequence + "'");
    const auto acts = activations_for(load_volume(*row.volumes[*chosen]), load_mask(row.mask), weights, config);
    char idx[8];
    std::snprintf(idx, sizeof idx, "%02d", map_index);
    const std::string stem = patient_id + "_" + lower(to_string(kSequences[*chosen])) + "_map" + idx;
    return inspect_activation(acts, map_index, config, out_dir, stem);
}

}  // namespace radiomics
