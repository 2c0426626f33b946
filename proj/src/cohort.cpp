#include "radiomics/cohort.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "radiomics/csv.hpp"
#include "radiomics/error.hpp"

namespace radiomics {

namespace {

double manifest_number(const std::string& cell, const std::string& what, const std::string& id) {
    try {
        return parse_number(cell);
    } catch (const Error&) {
        throw Error(ErrorCode::ManifestInvalid, id + ": " + what + " is not a number: '" + cell + "'");
    }
}

}  // namespace

const CohortRow& CohortManifest::find(const std::string& patient_id) const {
    for (const auto& r : rows)
        if (r.record.id == patient_id) return r;
    throw Error(ErrorCode::UnknownPatient, patient_id);
}

std::vector<PatientRecord> CohortManifest::records() const {
    std::vector<PatientRecord> out;
    for (const auto& r : rows) out.push_back(r.record);
    return out;
}

CohortManifest load_manifest(const std::filesystem::path& path) {
    CsvTable table;
    try {
        table = read_csv(path);
    } catch (const Error& e) {
        throw Error(ErrorCode::ManifestInvalid, e.what());
    }
    if (table.header.size() != kManifestColumns.size())
        throw Error(ErrorCode::ManifestInvalid, "manifest needs exactly 13 columns");
    for (std::size_t i = 0; i < kManifestColumns.size(); ++i)
        if (table.header[i] != kManifestColumns[i])
            throw Error(ErrorCode::ManifestInvalid,
                        "column " + std::to_string(i) + " must be '" + kManifestColumns[i] + "', got '" + table.header[i] + "'");

    const auto base = path.parent_path();
    auto resolve = [&](const std::string& cell) {
        std::filesystem::path p(cell);
        return p.is_absolute() ? p : base / p;
    };

    CohortManifest m;
    std::set<std::string> seen;
    for (const auto& cells : table.rows) {
        CohortRow row;
        PatientRecord& rec = row.record;
        rec.id = cells[0];
        if (rec.id.empty()) throw Error(ErrorCode::ManifestInvalid, "empty patient_id");
        if (!seen.insert(rec.id).second) throw Error(ErrorCode::ManifestInvalid, "duplicate patient_id " + rec.id);
        bool any_volume = false;
        for (std::size_t s = 0; s < kSequences.size(); ++s) {
            if (!cells[1 + s].empty()) {
                row.volumes[s] = resolve(cells[1 + s]);
                any_volume = true;
            }
        }
        if (!any_volume) throw Error(ErrorCode::ManifestInvalid, rec.id + ": no MRI sequence listed");
        if (cells[5].empty()) throw Error(ErrorCode::ManifestInvalid, rec.id + ": mask path is empty");
        row.mask = resolve(cells[5]);
        rec.age = manifest_number(cells[6], "age", rec.id);
        const double gender = manifest_number(cells[7], "gender", rec.id);
        const double event = manifest_number(cells[9], "event", rec.id);
        if (gender != 0.0 && gender != 1.0) throw Error(ErrorCode::ManifestInvalid, rec.id + ": gender must be 0 or 1");
        if (event != 0.0 && event != 1.0) throw Error(ErrorCode::ManifestInvalid, rec.id + ": event must be 0 or 1");
        rec.gender = static_cast<int>(gender);
        rec.event = static_cast<int>(event);
        rec.os_months = manifest_number(cells[8], "os_months", rec.id);
        rec.macrophage_m1 = manifest_number(cells[10], "macrophage_m1", rec.id);
        rec.neutrophils = manifest_number(cells[11], "neutrophils", rec.id);
        rec.tfh = manifest_number(cells[12], "tfh", rec.id);
        for (double f : {rec.macrophage_m1, rec.neutrophils, rec.tfh})
            if (!(f >= 0.0 && f <= 1.0))
                throw Error(ErrorCode::ManifestInvalid, rec.id + ": immune fractions must lie in [0, 1]");
        try {
            rec.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::ManifestInvalid, e.what());
        }
        m.rows.push_back(std::move(row));
    }
    if (m.rows.empty()) throw Error(ErrorCode::ManifestInvalid, "manifest has no patients");
    return m;
}

void write_manifest(const CohortManifest& manifest, const std::filesystem::path& path) {
    CsvTable t;
    t.header.assign(kManifestColumns.begin(), kManifestColumns.end());
    const auto base = path.parent_path();
    auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(base).generic_string(); };
    for (const auto& row : manifest.rows) {
        const auto& r = row.record;
        std::vector<std::string> cells{r.id};
        for (const auto& v : row.volumes) cells.push_back(v ? rel(*v) : "");
        cells.push_back(rel(row.mask));
        for (double x : {r.age, static_cast<double>(r.gender), r.os_months, static_cast<double>(r.event), r.macrophage_m1,
                         r.neutrophils, r.tfh})
            cells.push_back(format_number(x));
        t.rows.push_back(std::move(cells));
    }
    write_csv(t, path);
}

std::vector<std::string> missing_files(const CohortRow& row) {
    std::vector<std::string> out;
    auto check = [&](const std::filesystem::path& stem) {
        std::string s = stem.string();
        for (std::string_view suffix : {".vol.json", ".vol.raw"})
            if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
                s.resize(s.size() - suffix.size());
        for (const char* ext : {".vol.json", ".vol.raw"})
            if (!std::filesystem::exists(s + ext)) out.push_back(s + ext);
    };
    for (const auto& v : row.volumes)
        if (v) check(*v);
    check(row.mask);
    return out;
}

void RunConfig::validate() const {
    if (k < 1) throw Error(ErrorCode::InvalidK, "config k must be >= 1");
    if (feature_sets.empty()) throw Error(ErrorCode::InvalidArgument, "config feature_sets must be nonempty");
    if (!(target_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "config target_mm must be > 0");
    if (grid.n_trees.empty() || grid.min_leaf.empty()) throw Error(ErrorCode::InvalidArgument, "config grid is empty");
}

RunConfig config_from_json_text(const std::string& text) {
    RunConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.k = j.value("k", c.k);
        c.seed = j.value("seed", c.seed);
        if (j.contains("grid")) {
            c.grid.n_trees = j["grid"].value("n_trees", c.grid.n_trees);
            c.grid.min_leaf = j["grid"].value("min_leaf", c.grid.min_leaf);
        }
        if (j.contains("modality_reduction"))
            c.modality_reduction = reduction_from_string(j["modality_reduction"].get<std::string>());
        c.feature_sets = j.value("feature_sets", c.feature_sets);
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        c.target_mm = j.value("target_mm", c.target_mm);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    auto bytes = detail::read_file_bytes(path);
    return config_from_json_text(std::string(bytes.begin(), bytes.end()));
}

}  // namespace radiomics
