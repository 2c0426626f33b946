#include "radiomics/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "radiomics/error.hpp"

namespace radiomics {

namespace {

// One separable box-blur pass along `axis` with clamped borders.
std::vector<double> box_blur(const std::vector<double>& in, const Dims& d, int axis, int radius) {
    std::vector<double> out(in.size());
    const int n[3] = {d.nx, d.ny, d.nz};
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                int p[3] = {x, y, z};
                double sum = 0.0;
                for (int o = -radius; o <= radius; ++o) {
                    int q[3] = {x, y, z};
                    q[axis] = std::clamp(p[axis] + o, 0, n[axis] - 1);
                    sum += in[d.index(q[0], q[1], q[2])];
                }
                out[d.index(x, y, z)] = sum / (2 * radius + 1);
            }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
    double u1;
    do {
        u1 = unit_uniform(rng);
    } while (u1 <= 0.0);
    const double u2 = unit_uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<float> texture_field(TextureFamily family, const Dims& dims, double mean, double sd, int smoothing_radius,
                                 std::mt19937_64& rng) {
    std::vector<double> field(dims.count());
    for (auto& v : field) v = standard_normal(rng);
    if (family == TextureFamily::Coarse && smoothing_radius > 0) {
        for (int pass = 0; pass < 2; ++pass)
            for (int axis = 0; axis < 3; ++axis) field = box_blur(field, dims, axis, smoothing_radius);
    }
    double m = 0.0, var = 0.0;
    for (double v : field) m += v;
    m /= static_cast<double>(field.size());
    for (double v : field) var += (v - m) * (v - m);
    const double s = std::sqrt(var / static_cast<double>(field.size()));
    std::vector<float> out(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) out[i] = static_cast<float>(mean + sd * (field[i] - m) / s);
    return out;
}

SyntheticCohort write_synthetic_cohort(const std::filesystem::path& dir, const SyntheticOptions& options) {
    if (options.patients < 1) throw Error(ErrorCode::InvalidArgument, "synthetic cohort needs at least one patient");
    if (options.sequences.empty()) throw Error(ErrorCode::InvalidArgument, "synthetic cohort needs a sequence");
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(options.seed);

    std::vector<TextureFamily> families;
    for (int i = 0; i < options.patients; ++i) families.push_back(i % 2 ? TextureFamily::Coarse : TextureFamily::Fine);
    for (std::size_t i = families.size(); i > 1; --i)
        std::swap(families[i - 1], families[static_cast<std::size_t>(rng() % i)]);

    const Dims& d = options.dims;
    SyntheticCohort cohort;
    cohort.manifest_path = dir / "manifest.csv";
    for (int p = 0; p < options.patients; ++p) {
        char id_buf[16];
        std::snprintf(id_buf, sizeof id_buf, "P%03d", p + 1);
        const std::string id = id_buf;
        const TextureFamily family = families[static_cast<std::size_t>(p)];

        // Sphere centred near the middle of the field of view.
        const double cx = (d.nx - 1) / 2.0 + (unit_uniform(rng) - 0.5) * 4.0;
        const double cy = (d.ny - 1) / 2.0 + (unit_uniform(rng) - 0.5) * 4.0;
        const double cz = (d.nz - 1) / 2.0 + (unit_uniform(rng) - 0.5) * 2.0;
        const double r = options.radius_mm * (0.9 + 0.2 * unit_uniform(rng));
        std::vector<std::uint8_t> mask(d.count(), 0);
        for (int z = 0; z < d.nz; ++z)
            for (int y = 0; y < d.ny; ++y)
                for (int x = 0; x < d.nx; ++x) {
                    const double dx = (x - cx) * options.spacing.sx, dy = (y - cy) * options.spacing.sy,
                                 dz = (z - cz) * options.spacing.sz;
                    if (dx * dx + dy * dy + dz * dz <= r * r) mask[d.index(x, y, z)] = 1;
                }
        const RoiMask roi(d, mask, options.spacing);
        const auto mask_path = dir / (id + "_mask");
        save_mask(roi, mask_path);

        CohortRow row;
        row.mask = mask_path.string() + ".vol.json";
        for (Modality m : options.sequences) {
            const double tumour_mean = 120.0 + 20.0 * static_cast<int>(m);
            auto tumour = texture_field(family, d, tumour_mean, 25.0, options.smoothing_radius, rng);
            std::vector<float> data(d.count());
            for (std::size_t i = 0; i < data.size(); ++i)
                data[i] = mask[i] ? tumour[i] : static_cast<float>(60.0 + 5.0 * standard_normal(rng));
            const auto path = dir / (id + "_" + lower(to_string(m)));
            save_volume(Volume3D(d, options.spacing, std::move(data), m), path);
            const auto slot = static_cast<std::size_t>(std::find(kSequences.begin(), kSequences.end(), m) - kSequences.begin());
            row.volumes.at(slot) = path.string() + ".vol.json";
        }

        PatientRecord& rec = row.record;
        rec.id = id;
        rec.age = std::round(30.0 + 45.0 * unit_uniform(rng));
        rec.gender = unit_uniform(rng) < 0.5 ? 0 : 1;
        if (family == TextureFamily::Fine) {
            rec.os_months = std::round((4.0 + 8.0 * unit_uniform(rng)) * 100.0) / 100.0;
            rec.event = 1;
        } else {
            rec.os_months = std::round((20.0 + 20.0 * unit_uniform(rng)) * 100.0) / 100.0;
            rec.event = unit_uniform(rng) < 0.75 ? 1 : 0;
        }
        rec.macrophage_m1 = std::round(unit_uniform(rng) * 0.3 * 1e4) / 1e4;
        rec.neutrophils = std::round(unit_uniform(rng) * 0.3 * 1e4) / 1e4;
        rec.tfh = std::round(unit_uniform(rng) * 0.3 * 1e4) / 1e4;

        cohort.manifest.rows.push_back(std::move(row));
        cohort.patients.push_back({id, family});
    }
    write_manifest(cohort.manifest, cohort.manifest_path);
    return cohort;
}

}  // namespace radiomics
