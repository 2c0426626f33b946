#include "radiomics/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "radiomics/error.hpp"
#include "radiomics/parallel.hpp"

namespace radiomics {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'R', 'A', 'D', 'W', 'G', 'T', '0', '1'};
constexpr int kFcInputs = kFilters * 16 * 16 * 16;

json conv_header(const std::string& name, const ConvLayer& l) {
    return {{"name", name},
            {"kind", "conv3d"},
            {"out_channels", l.out_channels},
            {"in_channels", l.in_channels},
            {"kernel", {l.kernel, l.kernel, l.kernel}}};
}

json dense_header(const std::string& name, const DenseLayer& l) {
    return {{"name", name}, {"kind", "dense"}, {"inputs", l.inputs}, {"outputs", l.outputs}};
}

ConvLayer parse_conv(const json& j, int expected_out, int expected_in) {
    ConvLayer l;
    l.out_channels = j.at("out_channels").get<int>();
    l.in_channels = j.at("in_channels").get<int>();
    auto k = j.at("kernel").get<std::vector<int>>();
    if (l.out_channels != expected_out || l.in_channels != expected_in || k != std::vector<int>{kKernel, kKernel, kKernel})
        throw Error(ErrorCode::MalformedWeights, "conv layer '" + j.value("name", std::string()) + "' has wrong shape");
    l.kernel = kKernel;
    return l;
}

DenseLayer parse_dense(const json& j, int expected_in, int expected_out) {
    DenseLayer l;
    l.inputs = j.at("inputs").get<int>();
    l.outputs = j.at("outputs").get<int>();
    if (l.inputs != expected_in || l.outputs != expected_out)
        throw Error(ErrorCode::MalformedWeights, "dense layer '" + j.value("name", std::string()) + "' has wrong shape");
    return l;
}

class PayloadReader {
public:
    explicit PayloadReader(std::vector<float> values) : values_(std::move(values)) {}

    std::vector<float> take(std::size_t n) {
        if (n > values_.size() - pos_) throw Error(ErrorCode::MalformedWeights, "payload truncated");
        std::vector<float> out(values_.begin() + pos_, values_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }
    std::size_t remaining() const { return values_.size() - pos_; }

private:
    std::vector<float> values_;
    std::size_t pos_ = 0;
};

void check_conv(const ConvLayer& l, int out, int in) {
    if (l.out_channels != out || l.in_channels != in || l.kernel != kKernel || l.weights.size() != l.weight_count() ||
        l.biases.size() != static_cast<std::size_t>(out))
        throw Error(ErrorCode::MalformedWeights, "conv layer shape mismatch");
}

std::uint32_t read_u32le(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    if constexpr (std::endian::native == std::endian::big) v = detail::bswap32(v);
    return v;
}

}  // namespace

Tensor::Tensor(int channels_, Dims dims_, float fill)
    : channels(channels_), dims(dims_), data(static_cast<std::size_t>(channels_) * dims_.count(), fill) {}

Tensor Tensor::from_volume(const Volume3D& v) {
    Tensor t(1, v.dims());
    std::copy(v.data().begin(), v.data().end(), t.data.begin());
    return t;
}

Volume3D Tensor::channel_volume(int c, Spacing spacing) const {
    auto first = data.begin() + static_cast<std::ptrdiff_t>(c * channel_size());
    return Volume3D(dims, spacing, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(channel_size())));
}

CnnWeights load_weights(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
    auto bytes = detail::read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw Error(ErrorCode::MalformedWeights, path.string() + ": bad magic");
    const std::uint32_t header_len = read_u32le(bytes.data() + 8);
    if (bytes.size() < 12 + static_cast<std::size_t>(header_len))
        throw Error(ErrorCode::MalformedWeights, path.string() + ": header truncated");

    CnnWeights w;
    json layers;
    try {
        json header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
        w.version = header.at("version").get<int>();
        w.provenance = header.value("provenance", std::string());
        if (header.contains("seed") && !header["seed"].is_null()) w.seed = header["seed"].get<std::uint64_t>();
        layers = header.at("layers");
        if (w.version != 1) throw Error(ErrorCode::MalformedWeights, "unsupported weights version");
        if (!layers.is_array() || layers.size() < 2)
            throw Error(ErrorCode::MalformedWeights, "weights need at least two conv layers");
        w.conv1 = parse_conv(layers[0], kFilters, 1);
        w.conv2 = parse_conv(layers[1], kFilters, kFilters);
        if (layers.size() > 2) w.fc = parse_dense(layers[2], kFcInputs, kFcOutputs);
        if (layers.size() > 3) w.softmax = parse_dense(layers[3], kFcOutputs, kClasses);
        if (layers.size() > 4) throw Error(ErrorCode::MalformedWeights, "too many layers");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedWeights, path.string() + ": " + e.what());
    }

    std::span<const char> payload(bytes.data() + 12 + header_len, bytes.size() - 12 - header_len);
    if (payload.size() % 4 != 0) throw Error(ErrorCode::MalformedWeights, "payload is not a whole number of floats");
    PayloadReader reader(detail::decode_f32le_array(payload));
    w.conv1.weights = reader.take(w.conv1.weight_count());
    w.conv1.biases = reader.take(kFilters);
    w.conv2.weights = reader.take(w.conv2.weight_count());
    w.conv2.biases = reader.take(kFilters);
    for (DenseLayer* d : {&w.fc, &w.softmax}) {
        if (!d->present()) continue;
        d->weights = reader.take(static_cast<std::size_t>(d->inputs) * d->outputs);
        d->biases = reader.take(static_cast<std::size_t>(d->outputs));
    }
    if (reader.remaining() != 0) throw Error(ErrorCode::MalformedWeights, "payload longer than declared layers");

    auto all_finite = [](const std::vector<float>& v) {
        return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
    };
    for (const auto* v : {&w.conv1.weights, &w.conv1.biases, &w.conv2.weights, &w.conv2.biases, &w.fc.weights,
                          &w.fc.biases, &w.softmax.weights, &w.softmax.biases}) {
        if (!all_finite(*v)) throw Error(ErrorCode::NonFiniteWeights, path.string());
    }
    return w;
}

void save_weights(const CnnWeights& w, const std::filesystem::path& path) {
    check_conv(w.conv1, kFilters, 1);
    check_conv(w.conv2, kFilters, kFilters);
    json layers = json::array({conv_header("conv1", w.conv1), conv_header("conv2", w.conv2)});
    if (w.fc.present()) layers.push_back(dense_header("fc", w.fc));
    if (w.softmax.present()) {
        if (!w.fc.present()) throw Error(ErrorCode::MalformedWeights, "softmax layer requires fc layer");
        layers.push_back(dense_header("softmax", w.softmax));
    }
    json header = {{"format", "radiomics-cnn-weights"},
                   {"version", w.version},
                   {"provenance", w.provenance},
                   {"seed", w.seed ? json(*w.seed) : json(nullptr)},
                   {"layers", layers}};
    const std::string header_text = header.dump();

    std::vector<float> payload;
    for (const auto* v : {&w.conv1.weights, &w.conv1.biases, &w.conv2.weights, &w.conv2.biases, &w.fc.weights,
                          &w.fc.biases, &w.softmax.weights, &w.softmax.biases})
        payload.insert(payload.end(), v->begin(), v->end());

    std::string out(kMagic, 8);
    std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
    if constexpr (std::endian::native == std::endian::big) len = detail::bswap32(len);
    out.append(reinterpret_cast<const char*>(&len), 4);
    out += header_text;
    out += detail::encode_f32le_array(payload);
    detail::write_file_bytes(path, out);
}

CnnWeights generate_test_weights(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    // Hand-rolled mapping so the stream does not depend on the standard
    // library's distribution implementation.
    auto draw = [&rng] {
        for (;;) {
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            float v = static_cast<float>(u - 0.5);
            if (v > -0.5f && v < 0.5f) return v;
        }
    };
    auto fill = [&](std::vector<float>& v, std::size_t n) {
        v.resize(n);
        for (auto& x : v) x = draw();
    };

    CnnWeights w;
    w.provenance = "generated: uniform(-0.5,0.5) via mt19937_64";
    w.seed = seed;
    w.conv1 = {kFilters, 1, kKernel, {}, {}};
    w.conv2 = {kFilters, kFilters, kKernel, {}, {}};
    fill(w.conv1.weights, w.conv1.weight_count());
    fill(w.conv1.biases, kFilters);
    fill(w.conv2.weights, w.conv2.weight_count());
    fill(w.conv2.biases, kFilters);
    return w;
}

Tensor conv3d(const Tensor& input, const ConvLayer& layer, int stride, Padding padding) {
    if (input.channels != layer.in_channels)
        throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(input.channels) + " channels, filter expects " +
                                                  std::to_string(layer.in_channels));
    if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be positive");
    if (layer.weights.size() != layer.weight_count() || layer.biases.size() != static_cast<std::size_t>(layer.out_channels))
        throw Error(ErrorCode::ShapeMismatch, "filter tensor does not match its declared shape");

    const int k = layer.kernel;
    const Dims& in = input.dims;
    auto out_extent = [&](int n) {
        return padding == Padding::Same ? (n + stride - 1) / stride : (n >= k ? (n - k) / stride + 1 : 0);
    };
    // 'same' splits the total padding with the smaller half in front.
    auto pad_before = [&](int n, int out) {
        return padding == Padding::Same ? std::max((out - 1) * stride + k - n, 0) / 2 : 0;
    };
    const Dims out{out_extent(in.nx), out_extent(in.ny), out_extent(in.nz)};
    if (!out.valid()) throw Error(ErrorCode::ShapeMismatch, "input smaller than kernel");
    const int px = pad_before(in.nx, out.nx), py = pad_before(in.ny, out.ny), pz = pad_before(in.nz, out.nz);

    Tensor result(layer.out_channels, out);
    parallel_for(static_cast<std::size_t>(layer.out_channels), [&](std::size_t oi) {
        const int o = static_cast<int>(oi);
        std::vector<double> acc(out.count(), static_cast<double>(layer.biases[o]));
        for (int c = 0; c < layer.in_channels; ++c) {
            for (int dz = 0; dz < k; ++dz)
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) {
                        const double wt = layer.w(o, c, dx, dy, dz);
                        if (wt == 0.0) continue;
                        for (int z = 0; z < out.nz; ++z) {
                            const int sz = z * stride + dz - pz;
                            if (sz < 0 || sz >= in.nz) continue;
                            for (int y = 0; y < out.ny; ++y) {
                                const int sy = y * stride + dy - py;
                                if (sy < 0 || sy >= in.ny) continue;
                                double* dst = &acc[out.index(0, y, z)];
                                const float* row = &input.data[c * input.channel_size() + in.index(0, sy, sz)];
                                for (int x = 0; x < out.nx; ++x) {
                                    const int sx = x * stride + dx - px;
                                    if (sx < 0 || sx >= in.nx) continue;
                                    dst[x] += wt * row[sx];
                                }
                            }
                        }
                    }
        }
        float* dst = &result.data[oi * out.count()];
        for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i]);
    });
    return result;
}

Tensor maxpool3d(const Tensor& input, int window, int stride) {
    const Dims& in = input.dims;
    if (window < 1 || stride < 1) throw Error(ErrorCode::InvalidArgument, "window and stride must be positive");
    if (in.nx % stride || in.ny % stride || in.nz % stride)
        throw Error(ErrorCode::IndivisibleDims, "spatial dims must be divisible by the pooling stride");
    const Dims out{in.nx / stride, in.ny / stride, in.nz / stride};
    Tensor result(input.channels, out);
    for (int c = 0; c < input.channels; ++c)
        for (int z = 0; z < out.nz; ++z)
            for (int y = 0; y < out.ny; ++y)
                for (int x = 0; x < out.nx; ++x) {
                    float best = -std::numeric_limits<float>::infinity();
                    for (int dz = 0; dz < window; ++dz)
                        for (int dy = 0; dy < window; ++dy)
                            for (int dx = 0; dx < window; ++dx) {
                                int sx = x * stride + dx, sy = y * stride + dy, sz = z * stride + dz;
                                if (sx >= in.nx || sy >= in.ny || sz >= in.nz) continue;
                                best = std::max(best, input.at(c, sx, sy, sz));
                            }
                    result.at(c, x, y, z) = best;
                }
    return result;
}

Tensor relu(Tensor input) {
    for (auto& v : input.data) v = std::max(v, 0.0f);
    return input;
}

RoiMask downsample_mask(const RoiMask& mask) {
    const Dims& in = mask.dims();
    if (in.nx % 2 || in.ny % 2 || in.nz % 2) throw Error(ErrorCode::IndivisibleDims, "mask dims must be even");
    const Dims out{in.nx / 2, in.ny / 2, in.nz / 2};
    std::vector<std::uint8_t> voxels(out.count(), 0);
    for (int z = 0; z < in.nz; ++z)
        for (int y = 0; y < in.ny; ++y)
            for (int x = 0; x < in.nx; ++x)
                if (mask.at(x, y, z)) voxels[out.index(x / 2, y / 2, z / 2)] = 1;
    const Spacing& s = mask.spacing();
    return RoiMask(out, std::move(voxels), {s.sx * 2, s.sy * 2, s.sz * 2});
}

const Volume3D& ActivationSet::map(int index) const {
    if (index < 0 || index >= kMapCount) throw Error(ErrorCode::BadMapIndex, std::to_string(index));
    if (index == 0) return input_map;
    if (index <= kFilters) return layer1_maps.at(static_cast<std::size_t>(index - 1));
    return layer2_maps.at(static_cast<std::size_t>(index - 1 - kFilters));
}

const RoiMask& ActivationSet::mask_for(int index) const {
    if (index < 0 || index >= kMapCount) throw Error(ErrorCode::BadMapIndex, std::to_string(index));
    if (index == 0) return mask64;
    return index <= kFilters ? mask32 : mask16;
}

ActivationSet forward(const Volume3D& input64, const RoiMask& mask64, const CnnWeights& w) {
    const Dims cube{kCnnInputSize, kCnnInputSize, kCnnInputSize};
    if (input64.dims() != cube || mask64.dims() != cube)
        throw Error(ErrorCode::ShapeMismatch, "network input and mask must be 64x64x64");
    check_conv(w.conv1, kFilters, 1);
    check_conv(w.conv2, kFilters, kFilters);

    // conv (stride 1, same) -> ReLU -> 2^3 max-pool; dropout is identity here.
    Tensor l1 = maxpool3d(relu(conv3d(Tensor::from_volume(input64), w.conv1, 1, Padding::Same)));
    Tensor l2 = maxpool3d(relu(conv3d(l1, w.conv2, 1, Padding::Same)));

    ActivationSet acts;
    acts.input_map = input64;
    acts.mask64 = mask64;
    acts.mask32 = downsample_mask(mask64);
    acts.mask16 = downsample_mask(acts.mask32);
    for (int c = 0; c < kFilters; ++c) {
        acts.layer1_maps.push_back(l1.channel_volume(c, acts.mask32.spacing()));
        acts.layer2_maps.push_back(l2.channel_volume(c, acts.mask16.spacing()));
    }
    return acts;
}

}  // namespace radiomics
