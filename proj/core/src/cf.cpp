#include "mfid/cf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mfid/hashing.hpp"
#include "mfid/binio.hpp"
#include "mfid/parallel.hpp"
#include "mfid/rng.hpp"
#include "mfid/sut_math.hpp"

namespace mfid {

uint64_t CfConfig::hash() const {
    char buf[256];
    const int n = std::snprintf(
        buf, sizeof(buf), "k=%d|s=%d|r=%d|ls=%.9g|lt=%.9g|ts=%.9g|tg=%.9g|in=%d|ib=%.9g|st=%.9g|bs=%llu",
        k_cf, steps, mask_resolution, static_cast<double>(lambda_sparsity),
        static_cast<double>(lambda_tv), static_cast<double>(tau_flip_steering),
        static_cast<double>(tau_flip_segmentation), static_cast<int>(infill),
        static_cast<double>(infill_blur_radius), static_cast<double>(step_size),
        static_cast<unsigned long long>(base_seed));
    return fnv1a64(buf, static_cast<size_t>(n));
}

uint64_t CfConfig::seed_at(int k) const {
    return mix64(base_seed ^ mix64(static_cast<uint64_t>(k) + 0x5eedull));
}

uint64_t image_content_hash(const Image& img) {
    uint64_t h = fnv1a64("img");
    h = fnv1a64(&img.height, sizeof(img.height), h);
    h = fnv1a64(&img.width, sizeof(img.width), h);
    h = fnv1a64(&img.channels, sizeof(img.channels), h);
    return fnv1a64(img.data.data(), img.data.size() * sizeof(float), h);
}

namespace {

Image make_infill(const Image& x, const CfConfig& cfg) {
    if (cfg.infill == InfillKind::blur) return gaussian_blur(x, cfg.infill_blur_radius);
    Image out = x;
    for (int c = 0; c < x.channels; ++c) {
        double acc = 0.0;
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) acc += x.at(y, xx, c);
        const float m = static_cast<float>(acc / (static_cast<double>(x.height) * x.width));
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) out.at(y, xx, c) = m;
    }
    return out;
}

// d_flip between a perturbed output and the frozen base output, with its
// adjoint: |delta| for steering, mean |delta_i| for segmentation.
double flip_distance(SutKind kind, std::span<const float> out,
                     const std::vector<float>& base, std::span<float> dout) {
    if (kind == SutKind::steering) {
        const double d = static_cast<double>(out[0]) - static_cast<double>(base[0]);
        dout[0] = d > 0 ? 1.f : (d < 0 ? -1.f : 0.f);
        return std::abs(d);
    }
    const float inv_n = 1.f / static_cast<float>(out.size());
    double acc = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        const double d = static_cast<double>(out[i]) - static_cast<double>(base[i]);
        dout[i] = (d > 0 ? 1.f : (d < 0 ? -1.f : 0.f)) * inv_n;
        acc += std::abs(d);
    }
    return acc / static_cast<double>(out.size());
}

}  // namespace

Grid optimize_mask(const ReferenceSut& sut, const Image& x, const CfConfig& cfg,
                   uint64_t seed) {
    if (x.height != sut.in_h || x.width != sut.in_w || x.channels != sut.in_c)
        throw DimensionError("optimize_mask: image does not match SUT input shape");
    const int mr = cfg.mask_resolution;
    const int h = x.height, w = x.width, ch = x.channels;

    const Image infill = make_infill(x, cfg);
    detail::SutRunnerT<float> runner(sut);
    const auto base_span = runner.forward(x.data);
    const std::vector<float> base(base_span.begin(), base_span.end());

    Grid m = Grid::zeros(mr, mr);
    Rng rng(seed);
    for (auto& v : m.v) v = 0.25f + 0.5f * rng.next_float();

    std::vector<float> phi(x.data.size());
    std::vector<float> dout(base.size());
    std::vector<float> pixel_grad;
    Grid dfull = Grid::zeros(h, w);
    const float tau = cfg.tau_flip(sut.kind);
    const float sparsity_g = cfg.lambda_sparsity / static_cast<float>(mr * mr);

    float best_sparsity = 2.f;
    int plateau = 0;

    for (int step = 0; step < cfg.steps; ++step) {
        const Grid full = upsample_bilinear(m, h, w);
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const float mm = full.at(y, xx);
                const size_t o = (static_cast<size_t>(y) * w + xx) * ch;
                for (int c = 0; c < ch; ++c)
                    phi[o + c] = (1.f - mm) * x.data[o + c] + mm * infill.data[o + c];
            }
        const auto out = runner.forward(phi);
        const double d_flip = flip_distance(sut.kind, out, base, dout);
        if (!std::isfinite(d_flip)) throw NumericError("optimize_mask: non-finite flip distance");

        runner.backward_input(dout, pixel_grad);
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const size_t o = (static_cast<size_t>(y) * w + xx) * ch;
                float acc = 0.f;
                for (int c = 0; c < ch; ++c)
                    acc += pixel_grad[o + c] * (infill.data[o + c] - x.data[o + c]);
                dfull.at(y, xx) = acc;
            }
        Grid g = upsample_bilinear_adjoint(dfull, mr, mr);
        const Grid tvg = total_variation_grad(m);
        double sparsity = 0.0;
        for (size_t i = 0; i < m.v.size(); ++i) sparsity += m.v[i];
        sparsity /= static_cast<double>(m.v.size());

        // minimize -d_flip + lambda_s * mean(m) + lambda_tv * TV(m)
        for (size_t i = 0; i < m.v.size(); ++i) {
            const float grad = -g.v[i] + sparsity_g + cfg.lambda_tv * tvg.v[i];
            m.v[i] = clamp01(m.v[i] - cfg.step_size * grad);
        }

        if (d_flip >= tau) {
            if (sparsity < best_sparsity - 1e-6) {
                best_sparsity = static_cast<float>(sparsity);
                plateau = 0;
            } else if (++plateau >= 10) {
                break;
            }
        } else {
            plateau = 0;
        }
    }
    return upsample_bilinear(m, h, w);
}

DecisiveMap decisive_map(const ReferenceSut& sut, const Image& x, const CfConfig& cfg,
                         const DffCache* cache, int jobs) {
    DecisiveMap map;
    map.sut_hash = sut.id_hash();
    map.image_hash = image_content_hash(x);
    map.config_hash = cfg.hash();
    map.seeds.resize(static_cast<size_t>(cfg.k_cf));
    for (int k = 0; k < cfg.k_cf; ++k) map.seeds[static_cast<size_t>(k)] = cfg.seed_at(k);

    if (cache) {
        if (auto hit = cache->get(map.sut_hash, map.image_hash, map.config_hash)) return *hit;
    }

    std::vector<Grid> masks(static_cast<size_t>(cfg.k_cf));
    parallel_for(static_cast<size_t>(cfg.k_cf), jobs, [&](size_t k) {
        masks[k] = optimize_mask(sut, x, cfg, map.seeds[k]);
    });

    // reduce in seed order so the mean is schedule-independent
    map.full = Grid::zeros(x.height, x.width);
    std::vector<double> acc(map.full.size(), 0.0);
    for (const auto& mk : masks)
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(mk.v[i]);
    const double inv = 1.0 / static_cast<double>(cfg.k_cf);
    for (size_t i = 0; i < acc.size(); ++i) map.full.v[i] = static_cast<float>(acc[i] * inv);
    map.pooled = pool_to_16x16(map.full);

    if (cache) cache->put(map);
    return map;
}

double dff_distance(const DecisiveMap& a, const DecisiveMap& b) {
    if (a.sut_hash != b.sut_hash || a.config_hash != b.config_hash)
        throw ConfigError("dff_distance: maps come from different SUT or config");
    return mse(a.pooled, b.pooled);
}

// Cache ----------------------------------------------------------------------

DffCache::DffCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
}

std::filesystem::path DffCache::key_path(uint64_t s, uint64_t i, uint64_t c) const {
    return dir_ / (hash_hex(s) + "_" + hash_hex(i) + "_" + hash_hex(c) + ".mfdm");
}

std::optional<DecisiveMap> DffCache::get(uint64_t sut_hash, uint64_t image_hash,
                                         uint64_t config_hash) const {
    const auto path = key_path(sut_hash, image_hash, config_hash);
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        DecisiveMap m = load_decisive_map(path);
        if (m.sut_hash != sut_hash || m.image_hash != image_hash || m.config_hash != config_hash)
            throw IoError("cache key mismatch");
        return m;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "warning: corrupt cache entry %s (%s); recomputing\n",
                     path.string().c_str(), e.what());
        return std::nullopt;
    }
}

void DffCache::put(const DecisiveMap& map) const {
    save_decisive_map(map, key_path(map.sut_hash, map.image_hash, map.config_hash));
}

void save_decisive_map(const DecisiveMap& map, const std::filesystem::path& path) {
    BinWriter w;
    w.magic("MFDM");
    w.u64(map.sut_hash);
    w.u64(map.image_hash);
    w.u64(map.config_hash);
    w.u32(static_cast<uint32_t>(map.full.rows));
    w.u32(static_cast<uint32_t>(map.full.cols));
    w.f32_array(map.full.v.data(), map.full.v.size());
    w.f32_array(map.pooled.cells.data(), map.pooled.cells.size());
    w.u32(static_cast<uint32_t>(map.seeds.size()));
    for (uint64_t s : map.seeds) w.u64(s);
    w.crc32_trailer();
    w.save(path);
}

DecisiveMap load_decisive_map(const std::filesystem::path& path) {
    BinReader r = BinReader::load(path);
    r.expect_magic("MFDM");
    DecisiveMap m;
    m.sut_hash = r.u64();
    m.image_hash = r.u64();
    m.config_hash = r.u64();
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    if (rows <= 0 || cols <= 0 || rows > 1 << 14 || cols > 1 << 14)
        throw IoError("decisive map header invalid");
    m.full = Grid::zeros(rows, cols);
    r.f32_array(m.full.v.data(), m.full.v.size());
    r.f32_array(m.pooled.cells.data(), m.pooled.cells.size());
    const uint32_t n_seeds = r.u32();
    m.seeds.resize(n_seeds);
    for (auto& s : m.seeds) s = r.u64();
    r.check_crc32_trailer();
    return m;
}

}  // namespace mfid
