#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radiomics/classifier.hpp"
#include "radiomics/csv.hpp"
#include "radiomics/gmm.hpp"
#include "radiomics/survival.hpp"
#include "radiomics/volume.hpp"

namespace radiomics {

/// {auc, accuracy, confusion: [[tn, fp], [fn, tp]], scores: [{id, score, label}]}
nlohmann::json report_to_json(const EvalReport& report);
CsvTable roc_table(const std::vector<RocPoint>& roc);

/// time, at_risk, deaths, survival
CsvTable km_table(const KmCurve& curve);

/// {chi2, p, hr, ci_low, ci_high, median_short, median_long}; undefined
/// quantities are null. Group A of the test is the short-term group.
nlohmann::json survival_to_json(const SurvivalTestResult& result);

std::string km_svg(const KmCurve& short_term, const KmCurve& long_term, const std::string& title);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<long> counts;

    double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
};

/// Equal-width bins over [min, max]; a constant sample lands in one bar.
Histogram make_histogram(const std::vector<double>& samples, int bins = 64);
CsvTable histogram_table(const Histogram& h, const GmmFit& fit, std::size_t sample_count);
std::string histogram_svg(const Histogram& h, const GmmFit& fit, std::size_t sample_count, const std::string& title);

/// Binary PGM of axial slice z, linearly scaled to 0..255.
std::string slice_pgm(const Volume3D& v, int z);

}  // namespace radiomics
