#include <doctest.h>

#include <cmath>

#include "mfid/numerics.hpp"
#include "mfid/rng.hpp"

using namespace mfid;

namespace {

// Independent pooling oracle: explicit contiguous bins, remainder pixels to
// the leading bins, double-precision means.
double oracle_bin_mean(const Grid& m, int br, int bc) {
    auto edges = [](int n, int i) {
        const int base = n / 16, rem = n % 16;
        int e = 0;
        for (int k = 0; k < i; ++k) e += base + (k < rem ? 1 : 0);
        return e;
    };
    const int r0 = edges(m.rows, br), r1 = edges(m.rows, br + 1);
    const int c0 = edges(m.cols, bc), c1 = edges(m.cols, bc + 1);
    double acc = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) acc += m.at(r, c);
    return acc / ((r1 - r0) * (c1 - c0));
}

Image noisy_copy(const Image& base, double sigma, uint64_t seed) {
    Rng rng(seed);
    Image out = base;
    for (auto& v : out.data)
        v = clamp01(v + static_cast<float>(sigma * (2.0 * rng.next_double() - 1.0)));
    return out;
}

Image random_image(int h, int w, int c, uint64_t seed) {
    Rng rng(seed);
    Image img = Image::zeros(h, w, c);
    for (auto& v : img.data) v = rng.next_float();
    return img;
}

}  // namespace

TEST_CASE("mse basic cases") {
    Grid a = Grid::constant(2, 2, 0.3f);
    CHECK(mse(a, a) == doctest::Approx(0.0));

    Grid zeros = Grid::constant(2, 2, 0.f);
    Grid ones = Grid::constant(2, 2, 1.f);
    CHECK(mse(zeros, ones) == doctest::Approx(1.0));
    CHECK(mse(ones, zeros) == doctest::Approx(1.0));

    // hand-evaluated: ((0.5)^2 + (0.5)^2) / 2 = 0.25
    Grid x{1, 2, {0.f, 0.5f}};
    Grid y{1, 2, {0.5f, 1.0f}};
    CHECK(mse(x, y) == doctest::Approx(0.25));

    Grid bad = Grid::constant(2, 3, 0.f);
    CHECK_THROWS_AS((void)mse(a, bad), DimensionError);
}

TEST_CASE("mse distance axioms on random grids") {
    for (uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        Grid a = Grid::zeros(9, 7), b = Grid::zeros(9, 7);
        for (auto& v : a.v) v = rng.next_float();
        for (auto& v : b.v) v = rng.next_float();
        CHECK(mse(a, a) == 0.0);
        CHECK(mse(a, b) == mse(b, a));
        CHECK(mse(a, b) >= 0.0);
    }
}

TEST_CASE("pool_to_16x16 constant and identity") {
    Grid c = Grid::constant(48, 33, 0.7f);
    const PooledMap p = pool_to_16x16(c);
    for (float v : p.cells) CHECK(v == doctest::Approx(0.7f));

    Grid ident = Grid::zeros(16, 16);
    Rng rng(5);
    for (auto& v : ident.v) v = rng.next_float();
    const PooledMap pi = pool_to_16x16(ident);
    for (int r = 0; r < 16; ++r)
        for (int cidx = 0; cidx < 16; ++cidx)
            CHECK(pi.at(r, cidx) == doctest::Approx(ident.at(r, cidx)));
}

TEST_CASE("pool_to_16x16 half-split 32x32 map") {
    Grid m = Grid::zeros(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 16; ++c) m.at(r, c) = 1.f;
    const PooledMap p = pool_to_16x16(m);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) CHECK(p.at(r, c) == doctest::Approx(c < 8 ? 1.f : 0.f));
}

TEST_CASE("pool_to_16x16 matches brute-force oracle on ragged shapes") {
    for (auto [rows, cols] : {std::pair{17, 35}, std::pair{100, 49}, std::pair{16, 16}}) {
        Rng rng(static_cast<uint64_t>(rows * 1000 + cols));
        Grid m = Grid::zeros(rows, cols);
        for (auto& v : m.v) v = rng.next_float();
        const PooledMap p = pool_to_16x16(m);
        for (int br = 0; br < 16; ++br)
            for (int bc = 0; bc < 16; ++bc)
                CHECK(p.at(br, bc) == doctest::Approx(oracle_bin_mean(m, br, bc)).epsilon(1e-6));
    }
}

TEST_CASE("pool_to_16x16 preserves the global mean for multiple-of-16 shapes") {
    Rng rng(99);
    Grid m = Grid::zeros(64, 128);
    double mean = 0.0;
    for (auto& v : m.v) {
        v = rng.next_float();
        mean += v;
    }
    mean /= static_cast<double>(m.size());
    const PooledMap p = pool_to_16x16(m);
    double pooled_mean = 0.0;
    for (float v : p.cells) pooled_mean += v;
    pooled_mean /= 256.0;
    CHECK(std::abs(pooled_mean - mean) < 1e-7);  // float cells; double bins agree to 1e-12
}

TEST_CASE("pool_to_16x16 rejects too-small inputs") {
    CHECK_THROWS_AS((void)pool_to_16x16(Grid::constant(15, 20, 0.f)), DimensionError);
    CHECK_THROWS_AS((void)pool_to_16x16(Grid::constant(20, 15, 0.f)), DimensionError);
}

TEST_CASE("total_variation enumerated cases") {
    CHECK(total_variation(Grid::constant(5, 5, 0.42f)) == doctest::Approx(0.0));

    Grid cols{2, 2, {0.f, 1.f, 0.f, 1.f}};
    CHECK(total_variation(cols) == doctest::Approx(0.5));

    Grid checker{2, 2, {0.f, 1.f, 1.f, 0.f}};
    CHECK(total_variation(checker) == doctest::Approx(1.0));

    CHECK_THROWS_AS((void)total_variation(Grid::constant(1, 4, 0.f)), DimensionError);
}

TEST_CASE("perceptual_distance identity, clamp boundary, symmetry") {
    const Image a = random_image(32, 32, 3, 7);
    CHECK(perceptual_distance(a, a) == 0.0);

    const Image zeros = Image::zeros(32, 32, 3);
    const Image ones = Image::constant(32, 32, 3, 1.f);
    CHECK(perceptual_distance(zeros, ones) == doctest::Approx(1.0));

    const Image b = random_image(32, 32, 3, 8);
    CHECK(perceptual_distance(a, b) == perceptual_distance(b, a));
    CHECK(perceptual_distance(a, b) > 0.0);

    CHECK_THROWS_AS((void)perceptual_distance(a, Image::zeros(16, 16, 3)), DimensionError);
}

TEST_CASE("perceptual_distance grows with noise level") {
    const Image base = random_image(64, 64, 3, 11);
    int ordered = 0;
    for (uint64_t trial = 0; trial < 100; ++trial) {
        const Image lo = noisy_copy(base, 0.05, 1000 + trial);
        const Image hi = noisy_copy(base, 0.20, 2000 + trial);
        if (perceptual_distance(base, lo) < perceptual_distance(base, hi)) ++ordered;
    }
    CHECK(ordered >= 95);
}

TEST_CASE("bilinear upsample and adjoint satisfy the dot-product identity") {
    Rng rng(3);
    Grid coarse = Grid::zeros(8, 8);
    for (auto& v : coarse.v) v = rng.next_float();
    Grid g_full = Grid::zeros(32, 32);
    for (auto& v : g_full.v) v = rng.next_float();

    const Grid up = upsample_bilinear(coarse, 32, 32);
    const Grid down = upsample_bilinear_adjoint(g_full, 8, 8);

    double lhs = 0.0, rhs = 0.0;
    for (size_t i = 0; i < up.v.size(); ++i) lhs += static_cast<double>(up.v[i]) * g_full.v[i];
    for (size_t i = 0; i < coarse.v.size(); ++i)
        rhs += static_cast<double>(coarse.v[i]) * down.v[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
}

TEST_CASE("gaussian blur keeps constants and preserves mass approximately") {
    const Image c = Image::constant(40, 40, 1, 0.37f);
    const Image b = gaussian_blur(c, 2.f);
    for (float v : b.data) CHECK(v == doctest::Approx(0.37f));

    const Image img = random_image(64, 64, 1, 21);
    const Image blurred = gaussian_blur(img, 1.5f);
    double m0 = 0.0, m1 = 0.0;
    for (float v : img.data) m0 += v;
    for (float v : blurred.data) m1 += v;
    CHECK(std::abs(m0 - m1) / m0 < 0.01);  // edge clamping only redistributes
}

TEST_CASE("image validate flags shape and range errors") {
    Image img = Image::zeros(4, 4, 3);
    CHECK_NOTHROW(img.validate());
    img.data[5] = 1.5f;
    CHECK_THROWS_AS(img.validate(), ValidationError);
    img.data[5] = 0.5f;
    img.data.pop_back();
    CHECK_THROWS_AS(img.validate(), ValidationError);
}
