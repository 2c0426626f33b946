#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "radiomics/cnn.hpp"
#include "radiomics/error.hpp"

using namespace radiomics;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected radiomics::Error");
    return ErrorCode::IoError;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("weights round trip and framing errors") {
    auto dir = oracle::scratch_dir("weights");
    const CnnWeights w = generate_test_weights(1234);
    save_weights(w, dir / "w.bin");
    const CnnWeights back = load_weights(dir / "w.bin");
    CHECK(back.conv1.weights == w.conv1.weights);
    CHECK(back.conv2.biases == w.conv2.biases);
    CHECK(back.seed == std::optional<std::uint64_t>(1234));
    CHECK_FALSE(back.fc.present());

    const std::string bytes = slurp(dir / "w.bin");
    std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 4);
    CHECK(code_of([&] { load_weights(dir / "short.bin"); }) == ErrorCode::MalformedWeights);
    std::ofstream(dir / "magic.bin", std::ios::binary) << "XXXXXXXX" << bytes.substr(8);
    CHECK(code_of([&] { load_weights(dir / "magic.bin"); }) == ErrorCode::MalformedWeights);
    CHECK(code_of([&] { load_weights(dir / "absent.bin"); }) == ErrorCode::MissingFile);

    CnnWeights bad = w;
    bad.conv2.weights[17] = std::numeric_limits<float>::infinity();
    save_weights(bad, dir / "inf.bin");
    CHECK(code_of([&] { load_weights(dir / "inf.bin"); }) == ErrorCode::NonFiniteWeights);
}

TEST_CASE("weights with optional dense layers survive a round trip") {
    auto dir = oracle::scratch_dir("weights_dense");
    CnnWeights w = generate_test_weights(5);
    w.fc = {kFilters * 16 * 16 * 16, kFcOutputs, std::vector<float>(static_cast<std::size_t>(kFilters) * 4096 * kFcOutputs, 0.25f),
            std::vector<float>(kFcOutputs, -1.0f)};
    w.softmax = {kFcOutputs, kClasses, std::vector<float>(kFcOutputs * kClasses, 0.5f), {0.0f, 1.0f}};
    save_weights(w, dir / "w.bin");
    const CnnWeights back = load_weights(dir / "w.bin");
    CHECK(back.fc.outputs == kFcOutputs);
    CHECK(back.softmax.biases == std::vector<float>{0.0f, 1.0f});
    CHECK(back.conv1.weights == w.conv1.weights);
}

TEST_CASE("generated weights are seeded and lie in the open interval") {
    const CnnWeights a = generate_test_weights(42), b = generate_test_weights(42), c = generate_test_weights(43);
    CHECK(a.conv1.weights == b.conv1.weights);
    CHECK(a.conv2.weights == b.conv2.weights);
    CHECK(a.conv1.weights != c.conv1.weights);
    CHECK(a.conv1.weights.size() == 80);
    CHECK(a.conv2.weights.size() == 800);
    for (const auto* v : {&a.conv1.weights, &a.conv1.biases, &a.conv2.weights, &a.conv2.biases})
        for (float x : *v) {
            CHECK(x > -0.5f);
            CHECK(x < 0.5f);
        }
}

TEST_CASE("conv3d with zero filters yields the bias") {
    std::mt19937_64 rng(1);
    ConvLayer l = oracle::random_layer(3, 2, rng);
    std::fill(l.weights.begin(), l.weights.end(), 0.0f);
    const Tensor out = conv3d(oracle::random_tensor(2, {4, 5, 6}, rng), l, 1, Padding::Same);
    CHECK(out.dims == Dims{4, 5, 6});
    for (int o = 0; o < 3; ++o)
        for (int z = 0; z < 6; ++z) CHECK(out.at(o, 1, 2, z) == l.biases[static_cast<std::size_t>(o)]);
}

TEST_CASE("conv3d with a delta kernel reproduces the input") {
    std::mt19937_64 rng(2);
    ConvLayer l{1, 1, 2, std::vector<float>(8, 0.0f), {0.0f}};
    l.weights[0] = 1.0f;  // tap (0, 0, 0)
    const Tensor in = oracle::random_tensor(1, {5, 4, 3}, rng);
    const Tensor out = conv3d(in, l, 1, Padding::Valid);
    REQUIRE(out.dims == Dims{4, 3, 2});
    for (int z = 0; z < 2; ++z)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 4; ++x) CHECK(out.at(0, x, y, z) == in.at(0, x, y, z));
}

TEST_CASE("conv3d matches the direct sum on random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> extent(2, 8), chans(1, 4), stride(1, 2), pad(0, 1);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Dims d{extent(rng), extent(rng), extent(rng)};
        const int cin = chans(rng), cout = chans(rng), s = stride(rng);
        const bool same = pad(rng) == 1;
        const ConvLayer l = oracle::random_layer(cout, cin, rng);
        const Tensor in = oracle::random_tensor(cin, d, rng);
        const Tensor got = conv3d(in, l, s, same ? Padding::Same : Padding::Valid);
        const oracle::Grid4 want = oracle::conv(oracle::from_tensor(in), l, s, same);
        REQUIRE(got.dims == Dims{want.nx, want.ny, want.nz});
        REQUIRE(got.channels == want.c);
        worst = std::max(worst, oracle::max_rel_error(got, want));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("conv3d rejects mismatched channels") {
    std::mt19937_64 rng(3);
    const ConvLayer l = oracle::random_layer(2, 3, rng);
    CHECK(code_of([&] { conv3d(oracle::random_tensor(2, {4, 4, 4}, rng), l, 1, Padding::Same); }) ==
          ErrorCode::ShapeMismatch);
}

TEST_CASE("maxpool3d fixtures and enumeration oracle") {
    Tensor flat(2, {4, 4, 2}, 3.5f);
    const Tensor pooled = maxpool3d(flat);
    CHECK(pooled.dims == Dims{2, 2, 1});
    for (float v : pooled.data) CHECK(v == 3.5f);

    Tensor ramp(1, {2, 2, 2});
    for (int i = 0; i < 8; ++i) ramp.data[static_cast<std::size_t>(i)] = static_cast<float>(i);
    CHECK(maxpool3d(ramp).data == std::vector<float>{7.0f});

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> half(1, 4), chans(1, 4);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor in = oracle::random_tensor(chans(rng), {2 * half(rng), 2 * half(rng), 2 * half(rng)}, rng);
        const Tensor got = maxpool3d(in);
        const oracle::Grid4 want = oracle::maxpool(oracle::from_tensor(in));
        for (int c = 0; c < got.channels; ++c)
            for (int z = 0; z < want.nz; ++z)
                for (int y = 0; y < want.ny; ++y)
                    for (int x = 0; x < want.nx; ++x) REQUIRE(got.at(c, x, y, z) == want.get(c, x, y, z));
    }
    CHECK(code_of([&] { maxpool3d(Tensor(1, {3, 4, 4})); }) == ErrorCode::IndivisibleDims);
}

TEST_CASE("relu clamps negatives only") {
    Tensor t(1, {4, 1, 1});
    t.data = {-2.0f, -0.0f, 0.5f, 3.0f};
    CHECK(relu(t).data == std::vector<float>{0.0f, 0.0f, 0.5f, 3.0f});
}

TEST_CASE("forward produces 21 maps of the documented shapes, all non-negative after ReLU") {
    const Dims cube{64, 64, 64};
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    std::vector<float> data(cube.count());
    for (auto& x : data) x = u(rng);
    std::vector<std::uint8_t> mask(cube.count(), 0);
    for (int z = 20; z < 44; ++z)
        for (int y = 10; y < 50; ++y)
            for (int x = 17; x < 33; ++x) mask[cube.index(x, y, z)] = 1;
    const Volume3D in(cube, {1, 1, 1}, data);
    const RoiMask m(cube, mask);
    const CnnWeights w = generate_test_weights(9);
    const ActivationSet acts = forward(in, m, w);

    CHECK(acts.input_map.dims() == cube);
    REQUIRE(acts.layer1_maps.size() == 10);
    REQUIRE(acts.layer2_maps.size() == 10);
    std::size_t total = acts.input_map.data().size();
    for (int i = 1; i < kMapCount; ++i) {
        const Volume3D& map = acts.map(i);
        CHECK(map.dims() == (i <= 10 ? Dims{32, 32, 32} : Dims{16, 16, 16}));
        CHECK(acts.mask_for(i).dims() == map.dims());
        total += map.data().size();
        for (float v : map.data()) REQUIRE(v >= 0.0f);
    }
    CHECK(total == 64u * 64 * 64 + 10u * 32 * 32 * 32 + 10u * 16 * 16 * 16);
    CHECK(code_of([&] { acts.map(21); }) == ErrorCode::BadMapIndex);

    // Independent reference: the direct-sum conv, ReLU and window pooling.
    const oracle::Grid4 l1 = oracle::maxpool(oracle::relu(oracle::conv(oracle::from_tensor(Tensor::from_volume(in)), w.conv1, 1, true)));
    const oracle::Grid4 l2 = oracle::maxpool(oracle::relu(oracle::conv(l1, w.conv2, 1, true)));
    double worst = 0.0;
    for (int c = 0; c < 10; ++c)
        for (int z = 0; z < 16; ++z)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x) {
                    const double a = acts.layer2_maps[static_cast<std::size_t>(c)].at(x, y, z), b = l2.get(c, x, y, z);
                    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
                    const double a1 = acts.layer1_maps[static_cast<std::size_t>(c)].at(2 * x, 2 * y, 2 * z);
                    const double b1 = l1.get(c, 2 * x, 2 * y, 2 * z);
                    worst = std::max(worst, std::abs(a1 - b1) / std::max(1.0, std::abs(b1)));
                }
    CHECK(worst < 1e-5);

    // Coarse mask voxels are set exactly when some child is set.
    for (int z = 0; z < 32; ++z)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                bool any = false;
                for (int k = 0; k < 8; ++k) any = any || m.at(2 * x + (k & 1), 2 * y + ((k >> 1) & 1), 2 * z + (k >> 2));
                REQUIRE(acts.mask32.at(x, y, z) == any);
            }
}

TEST_CASE("forward rejects non-64 inputs") {
    const Dims d{32, 32, 32};
    CHECK(code_of([&] {
              forward(Volume3D(d, {1, 1, 1}, std::vector<float>(d.count(), 0.0f)),
                      RoiMask(d, std::vector<std::uint8_t>(d.count(), 1)), generate_test_weights(1));
          }) == ErrorCode::ShapeMismatch);
}
