#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radiomics {

enum class Modality { T1WI, T1CE, T2WI, FLAIR, DERIVED };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    bool valid() const { return nx > 0 && ny > 0 && nz > 0; }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(x);
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Millimetres per voxel along x, y, z.
struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;

    bool valid() const;
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Scalar 3D grid, x-fastest. Immutable once built: the constructor checks
/// shape, spacing and finiteness, and there is no mutable access afterwards.
class Volume3D {
public:
    Volume3D() = default;
    Volume3D(Dims dims, Spacing spacing, std::vector<float> data, Modality modality = Modality::DERIVED);

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    Modality modality() const { return modality_; }
    std::span<const float> data() const { return data_; }
    float at(int x, int y, int z) const { return data_[dims_.index(x, y, z)]; }

private:
    Dims dims_{};
    Spacing spacing_{};
    std::vector<float> data_;
    Modality modality_ = Modality::DERIVED;
};

/// Binary tumour mask. Carries the spacing of the volume it was drawn on so
/// it can follow that volume through resampling.
class RoiMask {
public:
    RoiMask() = default;
    RoiMask(Dims dims, std::vector<std::uint8_t> voxels, Spacing spacing = {});

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    std::span<const std::uint8_t> voxels() const { return voxels_; }
    bool at(int x, int y, int z) const { return voxels_[dims_.index(x, y, z)] != 0; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }

private:
    Dims dims_{};
    Spacing spacing_{};
    std::vector<std::uint8_t> voxels_;
};

// On-disk format: `<name>.vol.json` sidecar + `<name>.vol.raw` payload.
// `path` may name either file or the bare `<name>` stem.
Volume3D load_volume(const std::filesystem::path& path);
void save_volume(const Volume3D& v, const std::filesystem::path& path);
RoiMask load_mask(const std::filesystem::path& path);
void save_mask(const RoiMask& m, const std::filesystem::path& path);

Volume3D resample_isotropic(const Volume3D& v, double target_mm);

/// Resample a mask onto the same isotropic grid as resample_isotropic would
/// produce for its volume: trilinear on the 0/1 field, then a >0.5 threshold.
RoiMask resample_mask_isotropic(const RoiMask& m, double target_mm);

/// Linear map to [0, 255]; a constant volume becomes all zeros.
Volume3D standardize_intensity(const Volume3D& v);

inline constexpr int kCnnInputSize = 64;

struct CnnInput {
    Volume3D image;  // 64^3
    RoiMask mask;    // 64^3, never empty
};

/// Crop the mask's bounding box out of `v` (with out-of-mask voxels zeroed),
/// scale it isotropically to fit inside 64^3 and centre it in a zero canvas.
CnnInput extract_cnn_input(const Volume3D& v, const RoiMask& m);

/// Trilinear sample at a continuous voxel coordinate, clamped to the grid.
double sample_trilinear(const Volume3D& v, double x, double y, double z);

}  // namespace radiomics
