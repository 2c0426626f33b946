#include "radiomics/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace radiomics {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// Plot frame shared by the SVG writers: 640x400 canvas, 60px margins.
struct Frame {
    double x0, x1, y0, y1;
    static constexpr double kWidth = 640, kHeight = 400, kMargin = 60;

    double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
    double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }

    std::string open(const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
        std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
        s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
        s += "<text x=\"320\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";
        s += "<line x1=\"" + fixed(px(x0)) + "\" y1=\"" + fixed(py(y0)) + "\" x2=\"" + fixed(px(x1)) + "\" y2=\"" +
             fixed(py(y0)) + "\" stroke=\"black\"/>\n";
        s += "<line x1=\"" + fixed(px(x0)) + "\" y1=\"" + fixed(py(y0)) + "\" x2=\"" + fixed(px(x0)) + "\" y2=\"" +
             fixed(py(y1)) + "\" stroke=\"black\"/>\n";
        s += "<text x=\"320\" y=\"385\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + xlabel + "</text>\n";
        s += "<text x=\"15\" y=\"200\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
             "transform=\"rotate(-90 15 200)\">" +
             ylabel + "</text>\n";
        for (int i = 0; i <= 4; ++i) {
            const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
            s += "<text x=\"" + fixed(px(xv)) + "\" y=\"" + fixed(py(y0) + 15) +
                 "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fixed(xv) + "</text>\n";
            s += "<text x=\"" + fixed(px(x0) - 5) + "\" y=\"" + fixed(py(yv) + 3) +
                 "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fixed(yv) + "</text>\n";
        }
        return s;
    }
};

std::string km_path(const KmCurve& c, const Frame& f) {
    std::string d = "M" + fixed(f.px(0)) + "," + fixed(f.py(1.0));
    double s = 1.0;
    for (const auto& step : c.steps) {
        d += " L" + fixed(f.px(step.time)) + "," + fixed(f.py(s));
        s = step.survival;
        d += " L" + fixed(f.px(step.time)) + "," + fixed(f.py(s));
    }
    d += " L" + fixed(f.px(f.x1)) + "," + fixed(f.py(s));
    return d;
}

}  // namespace

json report_to_json(const EvalReport& report) {
    json scores = json::array();
    for (const auto& s : report.scores) scores.push_back({{"id", s.id}, {"score", s.score}, {"label", s.label}});
    const auto& c = report.confusion;
    return {{"auc", report.auc},
            {"accuracy", report.accuracy},
            {"confusion", {{c.tn, c.fp}, {c.fn, c.tp}}},
            {"scores", scores}};
}

CsvTable roc_table(const std::vector<RocPoint>& roc) {
    CsvTable t;
    t.header = {"fpr", "tpr"};
    for (const auto& p : roc) t.rows.push_back({format_number(p.fpr), format_number(p.tpr)});
    return t;
}

CsvTable km_table(const KmCurve& curve) {
    CsvTable t;
    t.header = {"time", "at_risk", "deaths", "survival"};
    for (const auto& s : curve.steps)
        t.rows.push_back({format_number(s.time), std::to_string(s.at_risk), std::to_string(s.deaths), format_number(s.survival)});
    return t;
}

json survival_to_json(const SurvivalTestResult& r) {
    return {{"chi2", r.chi2},
            {"p", r.p_value},
            {"hr", optional_number(r.hazard_ratio)},
            {"ci_low", optional_number(r.ci_low)},
            {"ci_high", optional_number(r.ci_high)},
            {"median_short", optional_number(r.median_a)},
            {"median_long", optional_number(r.median_b)}};
}

std::string km_svg(const KmCurve& short_term, const KmCurve& long_term, const std::string& title) {
    double t_max = 1.0;
    for (const auto* c : {&short_term, &long_term})
        for (const auto& s : c->steps) t_max = std::max(t_max, s.time);
    const Frame f{0.0, t_max * 1.05, 0.0, 1.0};
    std::string s = f.open(title, "time (months)", "survival probability");
    s += "<path d=\"" + km_path(short_term, f) + "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    s += "<path d=\"" + km_path(long_term, f) + "\" fill=\"none\" stroke=\"#2471a3\" stroke-width=\"2\"/>\n";
    s += "<text x=\"500\" y=\"70\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#c0392b\">short-term (n=" +
         std::to_string(short_term.subjects) + ")</text>\n";
    s += "<text x=\"500\" y=\"88\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#2471a3\">long-term (n=" +
         std::to_string(long_term.subjects) + ")</text>\n";
    s += "</svg>\n";
    return s;
}

Histogram make_histogram(const std::vector<double>& samples, int bins) {
    Histogram h;
    h.counts.assign(static_cast<std::size_t>(std::max(bins, 1)), 0);
    if (samples.empty()) return h;
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    h.lo = *lo;
    h.hi = *hi;
    const double width = h.bin_width();
    for (double x : samples) {
        std::size_t b = 0;
        if (width > 0) b = std::min(static_cast<std::size_t>((x - h.lo) / width), h.counts.size() - 1);
        ++h.counts[b];
    }
    return h;
}

CsvTable histogram_table(const Histogram& h, const GmmFit& fit, std::size_t sample_count) {
    CsvTable t;
    t.header = {"bin_low", "bin_high", "count", "density", "gmm_density"};
    const double width = h.bin_width();
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double lo = h.lo + width * static_cast<double>(b), hi = lo + width;
        const double density = width > 0 ? static_cast<double>(h.counts[b]) / (static_cast<double>(sample_count) * width)
                                          : std::nan("");
        t.rows.push_back({format_number(lo), format_number(hi), std::to_string(h.counts[b]), format_number(density),
                          format_number(gmm_density(fit.components, (lo + hi) / 2))});
    }
    return t;
}

std::string histogram_svg(const Histogram& h, const GmmFit& fit, std::size_t sample_count, const std::string& title) {
    const double n = static_cast<double>(std::max<std::size_t>(sample_count, 1));
    double width = h.bin_width();
    // A constant sample has no spread; draw its single bar one unit wide.
    const bool degenerate = !(width > 0);
    const double lo = degenerate ? h.lo - 0.5 : h.lo;
    const double hi = degenerate ? h.lo + 0.5 : h.hi;
    if (degenerate) width = 1.0;

    std::vector<double> density(h.counts.size());
    for (std::size_t b = 0; b < h.counts.size(); ++b) density[b] = static_cast<double>(h.counts[b]) / (n * width);
    const int curve_points = 200;
    std::vector<double> curve(curve_points + 1);
    double y_max = *std::max_element(density.begin(), density.end());
    for (int i = 0; i <= curve_points; ++i) {
        curve[static_cast<std::size_t>(i)] = gmm_density(fit.components, lo + (hi - lo) * i / curve_points);
        if (std::isfinite(curve[static_cast<std::size_t>(i)]))
            y_max = std::max(y_max, std::min(curve[static_cast<std::size_t>(i)], 4 * y_max + 1e-12));
    }
    if (!(y_max > 0)) y_max = 1.0;

    const Frame f{lo, hi, 0.0, y_max * 1.05};
    std::string s = f.open(title, "activation", "density");
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        if (h.counts[b] == 0) continue;
        const double x = degenerate ? lo : lo + width * static_cast<double>(b);
        const double top = std::min(density[b], f.y1);
        s += "<rect x=\"" + fixed(f.px(x)) + "\" y=\"" + fixed(f.py(top)) + "\" width=\"" +
             fixed(f.px(x + width) - f.px(x)) + "\" height=\"" + fixed(f.py(0) - f.py(top)) +
             "\" fill=\"#aab7b8\" stroke=\"#7f8c8d\" stroke-width=\"0.5\"/>\n";
    }
    s += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    for (int i = 0; i <= curve_points; ++i) {
        const double y = std::min(curve[static_cast<std::size_t>(i)], f.y1);
        if (i) s += ' ';
        s += fixed(f.px(lo + (hi - lo) * i / curve_points)) + "," + fixed(f.py(std::isfinite(y) ? y : f.y1));
    }
    s += "\"/>\n";
    int line = 0;
    for (const auto& c : fit.components) {
        s += "<text x=\"430\" y=\"" + std::to_string(70 + 16 * line++) +
             "\" font-family=\"sans-serif\" font-size=\"11\">mu=" + format_number(c.mu) +
             " var=" + format_number(c.sigma2) + " w=" + format_number(c.omega) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string slice_pgm(const Volume3D& v, int z) {
    const Dims& d = v.dims();
    z = std::clamp(z, 0, d.nz - 1);
    float lo = v.at(0, 0, z), hi = lo;
    for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
            lo = std::min(lo, v.at(x, y, z));
            hi = std::max(hi, v.at(x, y, z));
        }
    std::string out = "P5\n" + std::to_string(d.nx) + " " + std::to_string(d.ny) + "\n255\n";
    for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
            double g = hi > lo ? 255.0 * (v.at(x, y, z) - lo) / (hi - lo) : 0.0;
            out += static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(g, 0.0, 255.0))));
        }
    return out;
}

}  // namespace radiomics
