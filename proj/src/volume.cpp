#include "radiomics/volume.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "radiomics/error.hpp"

namespace radiomics {

namespace {

using nlohmann::json;

struct VolumePaths {
    std::filesystem::path sidecar;
    std::filesystem::path raw;
};

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

VolumePaths volume_paths(const std::filesystem::path& p) {
    std::string s = p.string();
    for (std::string_view suffix : {".vol.json", ".vol.raw"}) {
        if (ends_with(s, suffix)) {
            s.resize(s.size() - suffix.size());
            break;
        }
    }
    return {s + ".vol.json", s + ".vol.raw"};
}

struct Sidecar {
    Dims dims;
    Spacing spacing;
    std::string dtype;
    std::string modality;
};

Sidecar read_sidecar(const std::filesystem::path& path) {
    auto bytes = detail::read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
    }
    Sidecar sc;
    try {
        auto d = j.at("dims").get<std::vector<long long>>();
        auto s = j.at("spacing_mm").get<std::vector<double>>();
        if (d.size() != 3 || s.size() != 3) throw Error(ErrorCode::MalformedHeader, "dims/spacing_mm need 3 entries");
        for (long long n : d) {
            if (n <= 0 || n > std::numeric_limits<int>::max())
                throw Error(ErrorCode::MalformedHeader, "dims must be positive");
        }
        sc.dims = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
        sc.spacing = {s[0], s[1], s[2]};
        sc.dtype = j.at("dtype").get<std::string>();
        sc.modality = j.value("modality", std::string("DERIVED"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, path.string() + ": " + e.what());
    }
    if (!sc.spacing.valid()) throw Error(ErrorCode::MalformedHeader, path.string() + ": spacing must be finite and > 0");
    return sc;
}

void write_sidecar(const std::filesystem::path& path, const Dims& d, const Spacing& s, std::string_view dtype,
                   std::string_view modality) {
    json j;
    j["dims"] = {d.nx, d.ny, d.nz};
    j["spacing_mm"] = {s.sx, s.sy, s.sz};
    j["dtype"] = dtype;
    j["modality"] = modality;
    detail::write_file_bytes(path, j.dump(2) + "\n");
}

int resampled_extent(int n, double s, double target) {
    double extent = std::round(static_cast<double>(n) * s / target);
    if (!std::isfinite(extent) || extent > std::numeric_limits<int>::max())
        throw Error(ErrorCode::DegenerateOutput, "resampled extent is not representable");
    return std::max(1, static_cast<int>(extent));
}

// One interpolation axis: lower index, upper index and the weight of the upper.
struct AxisTap {
    int lo;
    int hi;
    double frac;
};

AxisTap axis_tap(double x, int n) {
    x = std::clamp(x, 0.0, static_cast<double>(n - 1));
    int lo = static_cast<int>(std::floor(x));
    int hi = std::min(lo + 1, n - 1);
    return {lo, hi, x - lo};
}

template <typename Fetch>
double trilinear(const Dims& d, double x, double y, double z, Fetch fetch) {
    AxisTap tx = axis_tap(x, d.nx), ty = axis_tap(y, d.ny), tz = axis_tap(z, d.nz);
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    double c00 = lerp(fetch(tx.lo, ty.lo, tz.lo), fetch(tx.hi, ty.lo, tz.lo), tx.frac);
    double c10 = lerp(fetch(tx.lo, ty.hi, tz.lo), fetch(tx.hi, ty.hi, tz.lo), tx.frac);
    double c01 = lerp(fetch(tx.lo, ty.lo, tz.hi), fetch(tx.hi, ty.lo, tz.hi), tx.frac);
    double c11 = lerp(fetch(tx.lo, ty.hi, tz.hi), fetch(tx.hi, ty.hi, tz.hi), tx.frac);
    return lerp(lerp(c00, c10, ty.frac), lerp(c01, c11, ty.frac), tz.frac);
}

// Resample any voxel field onto the isotropic grid. Voxel i of the input sits
// at physical position i*s, so lattice points of the input survive exactly.
template <typename Fetch>
std::vector<double> resample_field(const Dims& in, const Spacing& s, double target, Dims& out, Fetch fetch) {
    if (!(target > 0.0) || !std::isfinite(target))
        throw Error(ErrorCode::InvalidArgument, "target spacing must be finite and > 0");
    out = {resampled_extent(in.nx, s.sx, target), resampled_extent(in.ny, s.sy, target),
           resampled_extent(in.nz, s.sz, target)};
    std::vector<double> values(out.count());
    for (int z = 0; z < out.nz; ++z) {
        double zi = z * target / s.sz;
        for (int y = 0; y < out.ny; ++y) {
            double yi = y * target / s.sy;
            for (int x = 0; x < out.nx; ++x) {
                double xi = x * target / s.sx;
                values[out.index(x, y, z)] = trilinear(in, xi, yi, zi, fetch);
            }
        }
    }
    return values;
}

}  // namespace

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::T1WI: return "T1WI";
        case Modality::T1CE: return "T1CE";
        case Modality::T2WI: return "T2WI";
        case Modality::FLAIR: return "FLAIR";
        case Modality::DERIVED: return "DERIVED";
    }
    return "DERIVED";
}

Modality modality_from_string(std::string_view s) {
    std::string upper(s);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (Modality m : {Modality::T1WI, Modality::T1CE, Modality::T2WI, Modality::FLAIR, Modality::DERIVED}) {
        if (upper == to_string(m)) return m;
    }
    throw Error(ErrorCode::MalformedHeader, "unknown modality '" + std::string(s) + "'");
}

bool Spacing::valid() const {
    return std::isfinite(sx) && std::isfinite(sy) && std::isfinite(sz) && sx > 0 && sy > 0 && sz > 0;
}

Volume3D::Volume3D(Dims dims, Spacing spacing, std::vector<float> data, Modality modality)
    : dims_(dims), spacing_(spacing), data_(std::move(data)), modality_(modality) {
    if (!dims_.valid()) throw Error(ErrorCode::ShapeMismatch, "volume dims must be positive");
    if (data_.size() != dims_.count()) throw Error(ErrorCode::ShapeMismatch, "volume data length != nx*ny*nz");
    if (!spacing_.valid()) throw Error(ErrorCode::InvalidArgument, "volume spacing must be finite and > 0");
    for (float v : data_) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteData, "volume contains NaN or Inf");
    }
}

RoiMask::RoiMask(Dims dims, std::vector<std::uint8_t> voxels, Spacing spacing)
    : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)) {
    if (!dims_.valid()) throw Error(ErrorCode::ShapeMismatch, "mask dims must be positive");
    if (voxels_.size() != dims_.count()) throw Error(ErrorCode::ShapeMismatch, "mask length != nx*ny*nz");
    if (!spacing_.valid()) throw Error(ErrorCode::InvalidArgument, "mask spacing must be finite and > 0");
    for (auto& v : voxels_) v = v ? 1 : 0;
}

std::size_t RoiMask::count() const {
    return static_cast<std::size_t>(std::count(voxels_.begin(), voxels_.end(), std::uint8_t{1}));
}

Volume3D load_volume(const std::filesystem::path& path) {
    auto paths = volume_paths(path);
    if (!std::filesystem::exists(paths.sidecar)) throw Error(ErrorCode::MissingFile, paths.sidecar.string());
    Sidecar sc = read_sidecar(paths.sidecar);
    if (sc.dtype != "f32le") throw Error(ErrorCode::MalformedHeader, "volume dtype must be f32le, got " + sc.dtype);
    Modality modality = modality_from_string(sc.modality);
    if (!std::filesystem::exists(paths.raw)) throw Error(ErrorCode::MissingFile, paths.raw.string());
    auto bytes = detail::read_file_bytes(paths.raw);
    if (bytes.size() != sc.dims.count() * 4) {
        throw Error(ErrorCode::MalformedHeader, paths.raw.string() + ": payload has " + std::to_string(bytes.size()) +
                                                    " bytes, header declares " + std::to_string(sc.dims.count() * 4));
    }
    auto data = detail::decode_f32le_array(bytes);
    return Volume3D(sc.dims, sc.spacing, std::move(data), modality);
}

void save_volume(const Volume3D& v, const std::filesystem::path& path) {
    auto paths = volume_paths(path);
    write_sidecar(paths.sidecar, v.dims(), v.spacing(), "f32le", to_string(v.modality()));
    detail::write_file_bytes(paths.raw, detail::encode_f32le_array(v.data()));
}

RoiMask load_mask(const std::filesystem::path& path) {
    auto paths = volume_paths(path);
    if (!std::filesystem::exists(paths.sidecar)) throw Error(ErrorCode::MissingFile, paths.sidecar.string());
    Sidecar sc = read_sidecar(paths.sidecar);
    if (sc.dtype != "u8") throw Error(ErrorCode::MalformedHeader, "mask dtype must be u8, got " + sc.dtype);
    if (!std::filesystem::exists(paths.raw)) throw Error(ErrorCode::MissingFile, paths.raw.string());
    auto bytes = detail::read_file_bytes(paths.raw);
    if (bytes.size() != sc.dims.count())
        throw Error(ErrorCode::MalformedHeader, paths.raw.string() + ": payload length does not match dims");
    std::vector<std::uint8_t> voxels(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        auto b = static_cast<std::uint8_t>(bytes[i]);
        if (b > 1) throw Error(ErrorCode::MalformedHeader, paths.raw.string() + ": mask bytes must be 0 or 1");
        voxels[i] = b;
    }
    return RoiMask(sc.dims, std::move(voxels), sc.spacing);
}

void save_mask(const RoiMask& m, const std::filesystem::path& path) {
    auto paths = volume_paths(path);
    write_sidecar(paths.sidecar, m.dims(), m.spacing(), "u8", "DERIVED");
    auto vox = m.voxels();
    detail::write_file_bytes(paths.raw, std::string_view(reinterpret_cast<const char*>(vox.data()), vox.size()));
}

double sample_trilinear(const Volume3D& v, double x, double y, double z) {
    return trilinear(v.dims(), x, y, z, [&](int i, int j, int k) { return static_cast<double>(v.at(i, j, k)); });
}

Volume3D resample_isotropic(const Volume3D& v, double target_mm) {
    const Spacing& s = v.spacing();
    if (s.sx == target_mm && s.sy == target_mm && s.sz == target_mm) return v;
    Dims out;
    auto values = resample_field(v.dims(), s, target_mm, out,
                                 [&](int i, int j, int k) { return static_cast<double>(v.at(i, j, k)); });
    std::vector<float> data(values.begin(), values.end());
    return Volume3D(out, {target_mm, target_mm, target_mm}, std::move(data), v.modality());
}

RoiMask resample_mask_isotropic(const RoiMask& m, double target_mm) {
    const Spacing& s = m.spacing();
    if (s.sx == target_mm && s.sy == target_mm && s.sz == target_mm) return m;
    Dims out;
    auto values =
        resample_field(m.dims(), s, target_mm, out, [&](int i, int j, int k) { return m.at(i, j, k) ? 1.0 : 0.0; });
    std::vector<std::uint8_t> voxels(values.size());
    std::transform(values.begin(), values.end(), voxels.begin(), [](double w) { return w > 0.5 ? 1 : 0; });
    return RoiMask(out, std::move(voxels), {target_mm, target_mm, target_mm});
}

Volume3D standardize_intensity(const Volume3D& v) {
    auto data = v.data();
    auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
    const double lo = *lo_it;
    const double range = static_cast<double>(*hi_it) - lo;
    std::vector<float> out(data.size(), 0.0f);
    if (range > 0.0) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            double scaled = 255.0 * (static_cast<double>(data[i]) - lo) / range;
            out[i] = static_cast<float>(std::clamp(scaled, 0.0, 255.0));
        }
    }
    return Volume3D(v.dims(), v.spacing(), std::move(out), v.modality());
}

CnnInput extract_cnn_input(const Volume3D& v, const RoiMask& m) {
    if (v.dims() != m.dims()) throw Error(ErrorCode::ShapeMismatch, "volume and mask dims differ");
    const Dims& d = v.dims();

    std::array<int, 3> lo{d.nx, d.ny, d.nz}, hi{-1, -1, -1};
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                if (!m.at(x, y, z)) continue;
                lo = {std::min(lo[0], x), std::min(lo[1], y), std::min(lo[2], z)};
                hi = {std::max(hi[0], x), std::max(hi[1], y), std::max(hi[2], z)};
            }
    if (hi[0] < 0) throw Error(ErrorCode::EmptyMask, "mask has no foreground voxels");

    const Dims box{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
    std::vector<float> box_values(box.count());
    std::vector<float> box_mask(box.count());
    for (int z = 0; z < box.nz; ++z)
        for (int y = 0; y < box.ny; ++y)
            for (int x = 0; x < box.nx; ++x) {
                bool in = m.at(lo[0] + x, lo[1] + y, lo[2] + z);
                box_values[box.index(x, y, z)] = in ? v.at(lo[0] + x, lo[1] + y, lo[2] + z) : 0.0f;
                box_mask[box.index(x, y, z)] = in ? 1.0f : 0.0f;
            }

    const int longest = std::max({box.nx, box.ny, box.nz});
    const double scale = static_cast<double>(kCnnInputSize) / longest;
    auto fitted = [&](int b) { return std::clamp(static_cast<int>(std::lround(b * scale)), 1, kCnnInputSize); };
    const Dims fit{fitted(box.nx), fitted(box.ny), fitted(box.nz)};
    const std::array<int, 3> pad{(kCnnInputSize - fit.nx) / 2, (kCnnInputSize - fit.ny) / 2,
                                 (kCnnInputSize - fit.nz) / 2};

    // Centre-aligned mapping from fitted voxel to box voxel.
    auto src = [](int i, int b, int f) { return (i + 0.5) * b / f - 0.5; };

    const Dims out_dims{kCnnInputSize, kCnnInputSize, kCnnInputSize};
    std::vector<float> image(out_dims.count(), 0.0f);
    std::vector<std::uint8_t> mask(out_dims.count(), 0);
    auto fetch_value = [&](int i, int j, int k) { return static_cast<double>(box_values[box.index(i, j, k)]); };
    auto fetch_mask = [&](int i, int j, int k) { return static_cast<double>(box_mask[box.index(i, j, k)]); };
    for (int z = 0; z < fit.nz; ++z) {
        double sz = src(z, box.nz, fit.nz);
        for (int y = 0; y < fit.ny; ++y) {
            double sy = src(y, box.ny, fit.ny);
            for (int x = 0; x < fit.nx; ++x) {
                double sx = src(x, box.nx, fit.nx);
                std::size_t o = out_dims.index(pad[0] + x, pad[1] + y, pad[2] + z);
                image[o] = static_cast<float>(trilinear(box, sx, sy, sz, fetch_value));
                mask[o] = trilinear(box, sx, sy, sz, fetch_mask) > 0.5 ? 1 : 0;
            }
        }
    }
    mask[out_dims.index(pad[0] + fit.nx / 2, pad[1] + fit.ny / 2, pad[2] + fit.nz / 2)] = 1;

    const double out_mm = v.spacing().sx * longest / kCnnInputSize;
    const Spacing out_spacing{out_mm, out_mm, out_mm};
    return {Volume3D(out_dims, out_spacing, std::move(image), v.modality()),
            RoiMask(out_dims, std::move(mask), out_spacing)};
}

}  // namespace radiomics
