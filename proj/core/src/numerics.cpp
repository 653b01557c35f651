#include "mfid/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace mfid {

Image Image::zeros(int h, int w, int c) {
    Image img;
    img.height = h;
    img.width = w;
    img.channels = c;
    img.data.assign(static_cast<size_t>(h) * w * c, 0.f);
    return img;
}

Image Image::constant(int h, int w, int c, float value) {
    Image img = zeros(h, w, c);
    std::fill(img.data.begin(), img.data.end(), value);
    return img;
}

void Image::validate() const {
    if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
        throw ValidationError("image shape invalid");
    if (data.size() != static_cast<size_t>(height) * width * channels)
        throw ValidationError("image buffer length does not match shape");
    for (float x : data)
        if (!(x >= 0.f && x <= 1.f))
            throw ValidationError("image intensity outside [0,1]");
}

Grid Grid::zeros(int r, int c) {
    Grid g;
    g.rows = r;
    g.cols = c;
    g.v.assign(static_cast<size_t>(r) * c, 0.f);
    return g;
}

Grid Grid::constant(int r, int c, float value) {
    Grid g = zeros(r, c);
    std::fill(g.v.begin(), g.v.end(), value);
    return g;
}

double mse(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionError("mse: size mismatch");
    if (a.empty()) throw DimensionError("mse: empty input");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double mse(const Grid& a, const Grid& b) {
    if (!a.same_shape(b)) throw DimensionError("mse: grid shape mismatch");
    return mse(std::span<const float>(a.v), std::span<const float>(b.v));
}

double mse(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionError("mse: image shape mismatch");
    return mse(std::span<const float>(a.data), std::span<const float>(b.data));
}

double mse(const PooledMap& a, const PooledMap& b) {
    return mse(std::span<const float>(a.cells), std::span<const float>(b.cells));
}

namespace {

// 16 contiguous bins over n elements; the first n % 16 bins get one extra.
void bin_edges16(int n, int* edges) {
    const int base = n / 16;
    const int rem = n % 16;
    edges[0] = 0;
    for (int i = 0; i < 16; ++i) edges[i + 1] = edges[i] + base + (i < rem ? 1 : 0);
}

}  // namespace

PooledMap pool_to_16x16(const Grid& m) {
    if (m.rows < 16 || m.cols < 16)
        throw DimensionError("pool_to_16x16: input smaller than 16x16");
    int re[17], ce[17];
    bin_edges16(m.rows, re);
    bin_edges16(m.cols, ce);
    PooledMap out;
    for (int br = 0; br < 16; ++br) {
        for (int bc = 0; bc < 16; ++bc) {
            double acc = 0.0;
            for (int r = re[br]; r < re[br + 1]; ++r)
                for (int c = ce[bc]; c < ce[bc + 1]; ++c) acc += m.at(r, c);
            const int count = (re[br + 1] - re[br]) * (ce[bc + 1] - ce[bc]);
            out.at(br, bc) = static_cast<float>(acc / count);
        }
    }
    return out;
}

std::vector<double> pool_means(const Grid& m, int r, int c) {
    if (m.rows < r || m.cols < c) throw DimensionError("pool_means: grid too small");
    std::vector<double> out(static_cast<size_t>(r) * c, 0.0);
    std::vector<int> re(static_cast<size_t>(r) + 1), ce(static_cast<size_t>(c) + 1);
    for (int i = 0; i <= r; ++i) re[static_cast<size_t>(i)] = i * m.rows / r;
    for (int i = 0; i <= c; ++i) ce[static_cast<size_t>(i)] = i * m.cols / c;
    for (int br = 0; br < r; ++br)
        for (int bc = 0; bc < c; ++bc) {
            double acc = 0.0;
            int count = 0;
            for (int y = re[br]; y < re[br + 1]; ++y)
                for (int x = ce[bc]; x < ce[bc + 1]; ++x) {
                    acc += m.at(y, x);
                    ++count;
                }
            out[static_cast<size_t>(br) * c + bc] = acc / count;
        }
    return out;
}

double total_variation(const Grid& m) {
    if (m.rows < 2 || m.cols < 2) throw DimensionError("total_variation: need at least 2x2");
    double acc = 0.0;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c + 1 < m.cols; ++c)
            acc += std::abs(static_cast<double>(m.at(r, c + 1)) - m.at(r, c));
    for (int r = 0; r + 1 < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            acc += std::abs(static_cast<double>(m.at(r + 1, c)) - m.at(r, c));
    return acc / (static_cast<double>(m.rows) * m.cols);
}

Grid total_variation_grad(const Grid& m) {
    Grid g = Grid::zeros(m.rows, m.cols);
    const float inv_n = 1.f / (static_cast<float>(m.rows) * m.cols);
    auto sgn = [](float d) { return d > 0.f ? 1.f : (d < 0.f ? -1.f : 0.f); };
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c + 1 < m.cols; ++c) {
            const float s = sgn(m.at(r, c + 1) - m.at(r, c));
            g.at(r, c + 1) += s * inv_n;
            g.at(r, c) -= s * inv_n;
        }
    for (int r = 0; r + 1 < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            const float s = sgn(m.at(r + 1, c) - m.at(r, c));
            g.at(r + 1, c) += s * inv_n;
            g.at(r, c) -= s * inv_n;
        }
    return g;
}

Grid to_gray(const Image& img) {
    Grid g = Grid::zeros(img.height, img.width);
    const float inv_c = 1.f / static_cast<float>(img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float acc = 0.f;
            for (int c = 0; c < img.channels; ++c) acc += img.at(y, x, c);
            g.at(y, x) = acc * inv_c;
        }
    return g;
}

Grid gradient_magnitude(const Grid& m) {
    Grid g = Grid::zeros(m.rows, m.cols);
    constexpr float inv_sqrt2 = 0.7071067811865476f;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            const float gx = (c + 1 < m.cols) ? m.at(r, c + 1) - m.at(r, c) : 0.f;
            const float gy = (r + 1 < m.rows) ? m.at(r + 1, c) - m.at(r, c) : 0.f;
            g.at(r, c) = std::sqrt(gx * gx + gy * gy) * inv_sqrt2;
        }
    return g;
}

Grid downsample2(const Grid& m) {
    const int rows = (m.rows + 1) / 2;
    const int cols = (m.cols + 1) / 2;
    Grid out = Grid::zeros(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            int count = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int y = 2 * r + dy;
                    const int x = 2 * c + dx;
                    if (y < m.rows && x < m.cols) {
                        acc += m.at(y, x);
                        ++count;
                    }
                }
            out.at(r, c) = static_cast<float>(acc / count);
        }
    return out;
}

double perceptual_distance(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw DimensionError("perceptual_distance: shape mismatch");
    double acc = 0.0;
    int terms = 0;
    for (int c = 0; c < a.channels; ++c) {
        Grid ga = Grid::zeros(a.height, a.width);
        Grid gb = Grid::zeros(a.height, a.width);
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                ga.at(y, x) = a.at(y, x, c);
                gb.at(y, x) = b.at(y, x, c);
            }
        for (int scale = 0; scale < 3; ++scale) {
            if (scale > 0) {
                if (ga.rows < 2 || ga.cols < 2) break;
                ga = downsample2(ga);
                gb = downsample2(gb);
            }
            acc += mse(ga, gb);
            acc += mse(gradient_magnitude(ga), gradient_magnitude(gb));
            ++terms;
        }
    }
    const double d = acc / static_cast<double>(terms);
    return std::clamp(d, 0.0, 1.0);
}

Grid upsample_bilinear(const Grid& m, int rows, int cols) {
    Grid out = Grid::zeros(rows, cols);
    const float sy = static_cast<float>(m.rows) / rows;
    const float sx = static_cast<float>(m.cols) / cols;
    for (int y = 0; y < rows; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
        int y0 = static_cast<int>(std::floor(fy));
        const float wy = fy - static_cast<float>(y0);
        const int y1 = std::min(std::max(y0 + 1, 0), m.rows - 1);
        y0 = std::min(std::max(y0, 0), m.rows - 1);
        for (int x = 0; x < cols; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
            int x0 = static_cast<int>(std::floor(fx));
            const float wx = fx - static_cast<float>(x0);
            const int x1 = std::min(std::max(x0 + 1, 0), m.cols - 1);
            x0 = std::min(std::max(x0, 0), m.cols - 1);
            out.at(y, x) = (1.f - wy) * ((1.f - wx) * m.at(y0, x0) + wx * m.at(y0, x1)) +
                           wy * ((1.f - wx) * m.at(y1, x0) + wx * m.at(y1, x1));
        }
    }
    return out;
}

Grid upsample_bilinear_adjoint(const Grid& full_grad, int coarse_rows, int coarse_cols) {
    Grid out = Grid::zeros(coarse_rows, coarse_cols);
    const float sy = static_cast<float>(coarse_rows) / full_grad.rows;
    const float sx = static_cast<float>(coarse_cols) / full_grad.cols;
    for (int y = 0; y < full_grad.rows; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
        int y0 = static_cast<int>(std::floor(fy));
        const float wy = fy - static_cast<float>(y0);
        const int y1 = std::min(std::max(y0 + 1, 0), coarse_rows - 1);
        y0 = std::min(std::max(y0, 0), coarse_rows - 1);
        for (int x = 0; x < full_grad.cols; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
            int x0 = static_cast<int>(std::floor(fx));
            const float wx = fx - static_cast<float>(x0);
            const int x1 = std::min(std::max(x0 + 1, 0), coarse_cols - 1);
            x0 = std::min(std::max(x0, 0), coarse_cols - 1);
            const float g = full_grad.at(y, x);
            out.at(y0, x0) += (1.f - wy) * (1.f - wx) * g;
            out.at(y0, x1) += (1.f - wy) * wx * g;
            out.at(y1, x0) += wy * (1.f - wx) * g;
            out.at(y1, x1) += wy * wx * g;
        }
    }
    return out;
}

namespace {

std::vector<float> gaussian_kernel(float sigma) {
    const int radius = static_cast<int>(std::ceil(2.5f * sigma));
    std::vector<float> k(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (static_cast<double>(i) * i) / (static_cast<double>(sigma) * sigma));
        k[static_cast<size_t>(i + radius)] = static_cast<float>(w);
        sum += w;
    }
    for (auto& w : k) w = static_cast<float>(w / sum);
    return k;
}

// Separable blur of one channel plane with edge clamping.
void blur_plane(const float* src, float* dst, int rows, int cols, int stride,
                const std::vector<float>& k) {
    const int radius = static_cast<int>(k.size() / 2);
    std::vector<float> tmp(static_cast<size_t>(rows) * cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            float acc = 0.f;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, cols - 1);
                acc += k[static_cast<size_t>(i + radius)] *
                       src[(static_cast<size_t>(y) * cols + xx) * stride];
            }
            tmp[static_cast<size_t>(y) * cols + x] = acc;
        }
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            float acc = 0.f;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, rows - 1);
                acc += k[static_cast<size_t>(i + radius)] * tmp[static_cast<size_t>(yy) * cols + x];
            }
            dst[(static_cast<size_t>(y) * cols + x) * stride] = acc;
        }
}

}  // namespace

Image gaussian_blur(const Image& img, float radius) {
    if (radius <= 0.f) return img;
    const auto k = gaussian_kernel(radius);
    Image out = img;
    for (int c = 0; c < img.channels; ++c)
        blur_plane(img.data.data() + c, out.data.data() + c, img.height, img.width,
                   img.channels, k);
    return out;
}

Grid gaussian_blur(const Grid& m, float radius) {
    if (radius <= 0.f) return m;
    const auto k = gaussian_kernel(radius);
    Grid out = m;
    blur_plane(m.v.data(), out.v.data(), m.rows, m.cols, 1, k);
    return out;
}

}  // namespace mfid
