#pragma once

// Reference implementations used only by tests. Each is written the slow,
// obvious way and shares no code with the library path it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "radiomics/cnn.hpp"

namespace oracle {

struct Grid4 {
    int c = 0, nx = 0, ny = 0, nz = 0;
    std::vector<double> v;

    Grid4(int c_, int nx_, int ny_, int nz_) : c(c_), nx(nx_), ny(ny_), nz(nz_), v(static_cast<std::size_t>(c_ * nx_ * ny_ * nz_), 0.0) {}
    double& at(int ch, int x, int y, int z) { return v[static_cast<std::size_t>(((ch * nz + z) * ny + y) * nx + x)]; }
    double get(int ch, int x, int y, int z) const {
        if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) return 0.0;
        return v[static_cast<std::size_t>(((ch * nz + z) * ny + y) * nx + x)];
    }
};

inline Grid4 from_tensor(const radiomics::Tensor& t) {
    Grid4 g(t.channels, t.dims.nx, t.dims.ny, t.dims.nz);
    for (int c = 0; c < t.channels; ++c)
        for (int z = 0; z < t.dims.nz; ++z)
            for (int y = 0; y < t.dims.ny; ++y)
                for (int x = 0; x < t.dims.nx; ++x) g.at(c, x, y, z) = t.at(c, x, y, z);
    return g;
}

// Direct sum over (c, dx, dy, dz) for every output voxel.
inline Grid4 conv(const Grid4& in, const radiomics::ConvLayer& layer, int stride, bool same) {
    const int k = layer.kernel;
    int ox, oy, oz, px = 0, py = 0, pz = 0;
    if (same) {
        ox = (in.nx + stride - 1) / stride;
        oy = (in.ny + stride - 1) / stride;
        oz = (in.nz + stride - 1) / stride;
        px = std::max((ox - 1) * stride + k - in.nx, 0) / 2;
        py = std::max((oy - 1) * stride + k - in.ny, 0) / 2;
        pz = std::max((oz - 1) * stride + k - in.nz, 0) / 2;
    } else {
        ox = (in.nx - k) / stride + 1;
        oy = (in.ny - k) / stride + 1;
        oz = (in.nz - k) / stride + 1;
    }
    Grid4 out(layer.out_channels, ox, oy, oz);
    for (int o = 0; o < layer.out_channels; ++o)
        for (int z = 0; z < oz; ++z)
            for (int y = 0; y < oy; ++y)
                for (int x = 0; x < ox; ++x) {
                    double s = layer.biases[static_cast<std::size_t>(o)];
                    for (int c = 0; c < layer.in_channels; ++c)
                        for (int dx = 0; dx < k; ++dx)
                            for (int dy = 0; dy < k; ++dy)
                                for (int dz = 0; dz < k; ++dz)
                                    s += static_cast<double>(layer.w(o, c, dx, dy, dz)) *
                                         in.get(c, x * stride + dx - px, y * stride + dy - py, z * stride + dz - pz);
                    out.at(o, x, y, z) = s;
                }
    return out;
}

// Enumerates every window member explicitly.
inline Grid4 maxpool(const Grid4& in) {
    Grid4 out(in.c, in.nx / 2, in.ny / 2, in.nz / 2);
    for (int c = 0; c < in.c; ++c)
        for (int z = 0; z < out.nz; ++z)
            for (int y = 0; y < out.ny; ++y)
                for (int x = 0; x < out.nx; ++x) {
                    std::vector<double> window;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) window.push_back(in.get(c, 2 * x + dx, 2 * y + dy, 2 * z + dz));
                    out.at(c, x, y, z) = *std::max_element(window.begin(), window.end());
                }
    return out;
}

inline Grid4 relu(Grid4 g) {
    for (auto& v : g.v) v = v > 0 ? v : 0.0;
    return g;
}

/// Fraction of (positive, negative) pairs ordered correctly, ties 1/2.
inline double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        for (std::size_t j = 0; j < scores.size(); ++j)
            if (labels[i] == 1 && labels[j] == 0) {
                pairs += 1;
                wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
            }
    return wins / pairs;
}

inline radiomics::ConvLayer random_layer(int out, int in, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    radiomics::ConvLayer l{out, in, 2, {}, {}};
    l.weights.resize(l.weight_count());
    for (auto& w : l.weights) w = u(rng);
    l.biases.resize(static_cast<std::size_t>(out));
    for (auto& b : l.biases) b = u(rng);
    return l;
}

inline radiomics::Tensor random_tensor(int channels, radiomics::Dims d, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    radiomics::Tensor t(channels, d);
    for (auto& v : t.data) v = u(rng);
    return t;
}

/// max |a-b| / max(1, |b|) over all entries.
inline double max_rel_error(const radiomics::Tensor& got, const Grid4& want) {
    double worst = 0.0;
    for (int c = 0; c < got.channels; ++c)
        for (int z = 0; z < got.dims.nz; ++z)
            for (int y = 0; y < got.dims.ny; ++y)
                for (int x = 0; x < got.dims.nx; ++x) {
                    const double b = want.get(c, x, y, z);
                    worst = std::max(worst, std::abs(got.at(c, x, y, z) - b) / std::max(1.0, std::abs(b)));
                }
    return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("radiomics_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace oracle
