#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mfid/errors.hpp"

namespace mfid {

// Dense H x W x C image, row-major interleaved, intensities in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> data;

    static Image zeros(int h, int w, int c);
    static Image constant(int h, int w, int c, float value);

    float& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    // Throws ValidationError when a value is non-finite or outside [0, 1],
    // or when the buffer length disagrees with the declared shape.
    void validate() const;
};

// Single-channel dense map (masks, decisive maps, gradients of maps).
struct Grid {
    int rows = 0;
    int cols = 0;
    std::vector<float> v;

    static Grid zeros(int r, int c);
    static Grid constant(int r, int c, float value);

    float& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }
};

// 16 x 16 pooled map; cell (r, c) at index r * 16 + c.
struct PooledMap {
    std::array<float, 256> cells{};

    float at(int r, int c) const { return cells[static_cast<size_t>(r) * 16 + c]; }
    float& at(int r, int c) { return cells[static_cast<size_t>(r) * 16 + c]; }
};

double mse(std::span<const float> a, std::span<const float> b);
double mse(const Grid& a, const Grid& b);
double mse(const Image& a, const Image& b);
double mse(const PooledMap& a, const PooledMap& b);

// Partitions rows/cols into 16 contiguous near-equal bins (remainder pixels
// go to the leading bins) and averages each bin. Requires rows, cols >= 16.
PooledMap pool_to_16x16(const Grid& m);

// Mean over an r x c pooling of the grid; generalization used for feature
// summaries. Requires rows >= r, cols >= c.
std::vector<double> pool_means(const Grid& m, int r, int c);

// Sum of absolute horizontal and vertical neighbor differences divided by
// the pixel count. Requires at least 2 x 2.
double total_variation(const Grid& m);

// Subgradient of total_variation at m, same shape.
Grid total_variation_grad(const Grid& m);

// Multi-scale structural distance in [0, 1]: mean over 3 dyadic scales and
// all channels of (intensity MSE + normalized gradient-magnitude MSE),
// clamped to [0, 1]. Zero iff the images are identical; symmetric.
double perceptual_distance(const Image& a, const Image& b);

// Channel-mean grayscale view.
Grid to_gray(const Image& img);

// Gradient-magnitude map (forward differences, magnitude / sqrt(2)).
Grid gradient_magnitude(const Grid& m);

// 2x downsample by box averaging (partial blocks averaged at edges).
Grid downsample2(const Grid& m);

// Bilinear upsample to (rows, cols) using cell-center alignment.
Grid upsample_bilinear(const Grid& m, int rows, int cols);

// Adjoint of upsample_bilinear: scatters a full-resolution gradient back to
// the coarse grid.
Grid upsample_bilinear_adjoint(const Grid& full_grad, int coarse_rows, int coarse_cols);

// Gaussian blur with sigma = radius, kernel truncated at ceil(2.5 * sigma)
// (radius <= 0 returns the input unchanged). Applied per channel.
Image gaussian_blur(const Image& img, float radius);
Grid gaussian_blur(const Grid& m, float radius);

inline float clamp01(float x) { return x < 0.f ? 0.f : (x > 1.f ? 1.f : x); }

}  // namespace mfid
