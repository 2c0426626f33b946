#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "radiomics/volume.hpp"

namespace radiomics {

/// Channel-major stack of 3D grids; each channel is x-fastest.
struct Tensor {
    int channels = 0;
    Dims dims{};
    std::vector<float> data;

    Tensor() = default;
    Tensor(int channels, Dims dims, float fill = 0.0f);

    std::size_t channel_size() const { return dims.count(); }
    float& at(int c, int x, int y, int z) { return data[c * channel_size() + dims.index(x, y, z)]; }
    float at(int c, int x, int y, int z) const { return data[c * channel_size() + dims.index(x, y, z)]; }

    static Tensor from_volume(const Volume3D& v);
    Volume3D channel_volume(int c, Spacing spacing) const;
};

/// Cubic-kernel convolution layer. Weight index order is
/// [out][in][kz][ky][kx] with kx fastest; one bias per output channel.
struct ConvLayer {
    int out_channels = 0;
    int in_channels = 0;
    int kernel = 0;
    std::vector<float> weights;
    std::vector<float> biases;

    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel * kernel;
    }
    float w(int o, int c, int dx, int dy, int dz) const {
        return weights[(((static_cast<std::size_t>(o) * in_channels + c) * kernel + dz) * kernel + dy) * kernel + dx];
    }
};

/// Fully connected layer, stored for completeness but never executed:
/// feature extraction reads convolutional maps only.
struct DenseLayer {
    int inputs = 0;
    int outputs = 0;
    std::vector<float> weights;  // [out][in]
    std::vector<float> biases;

    bool present() const { return outputs > 0; }
};

struct CnnWeights {
    int version = 1;
    std::string provenance;
    std::optional<std::uint64_t> seed;
    ConvLayer conv1;  // 10 x 1 x 2^3
    ConvLayer conv2;  // 10 x 10 x 2^3
    DenseLayer fc;       // 40960 -> 128, optional
    DenseLayer softmax;  // 128 -> 2, optional
};

inline constexpr int kFilters = 10;
inline constexpr int kKernel = 2;
inline constexpr int kFcOutputs = 128;
inline constexpr int kClasses = 2;

CnnWeights load_weights(const std::filesystem::path& path);
void save_weights(const CnnWeights& w, const std::filesystem::path& path);

/// Uniform(-0.5, 0.5) weights from mt19937_64; bit-identical for equal seeds
/// on every platform.
CnnWeights generate_test_weights(std::uint64_t seed);

enum class Padding { Valid, Same };

Tensor conv3d(const Tensor& input, const ConvLayer& layer, int stride, Padding padding);
Tensor maxpool3d(const Tensor& input, int window = 2, int stride = 2);
Tensor relu(Tensor input);

/// A coarse voxel is in the ROI iff any of its 2^3 children is.
RoiMask downsample_mask(const RoiMask& mask);

inline constexpr int kMapCount = 21;

struct ActivationSet {
    Volume3D input_map;                // map 0, 64^3
    std::vector<Volume3D> layer1_maps;  // maps 1..10, 32^3
    std::vector<Volume3D> layer2_maps;  // maps 11..20, 16^3
    RoiMask mask64;
    RoiMask mask32;
    RoiMask mask16;

    const Volume3D& map(int index) const;
    const RoiMask& mask_for(int index) const;
};

ActivationSet forward(const Volume3D& input64, const RoiMask& mask64, const CnnWeights& w);

}  // namespace radiomics
