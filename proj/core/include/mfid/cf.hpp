#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mfid/numerics.hpp"
#include "mfid/sut.hpp"

namespace mfid {

enum class InfillKind { blur, mean };

struct CfConfig {
    int k_cf = 80;                     // seeds averaged per decisive map
    int steps = 80;                    // optimizer iterations per seed
    int mask_resolution = 32;          // coarse mask side, upsampled to image size
    float lambda_sparsity = 0.05f;
    float lambda_tv = 0.1f;
    float tau_flip_steering = 0.1f;    // rad
    float tau_flip_segmentation = 0.5f;  // mean |logit shift|
    InfillKind infill = InfillKind::blur;
    float infill_blur_radius = 5.f;
    float step_size = 0.05f;
    uint64_t base_seed = 0x6d666964;   // seed list generator

    uint64_t hash() const;
    float tau_flip(SutKind kind) const {
        return kind == SutKind::steering ? tau_flip_steering : tau_flip_segmentation;
    }
    // Seed zeta_k for the k-th mask.
    uint64_t seed_at(int k) const;
};

// Seed-averaged decisive map H(F(x)) with its pooled form and provenance.
struct DecisiveMap {
    Grid full;          // per-pixel, [0, 1]
    PooledMap pooled;   // pool_to_16x16(full), exactly
    uint64_t sut_hash = 0;
    uint64_t image_hash = 0;
    uint64_t config_hash = 0;
    std::vector<uint64_t> seeds;
};

// Sparsest decision-flipping mask for one seed: projected gradient descent
// on a coarse mask, bilinearly upsampled; see optimize_mask in cf.cpp for
// the loss. Returns the full-resolution mask.
Grid optimize_mask(const ReferenceSut& sut, const Image& x, const CfConfig& cfg, uint64_t seed);

// File cache for decisive maps: magic "MFDM", sut/image/config hashes,
// full map + pooled cells, trailing CRC32. Corrupt entries are recomputed.
class DffCache {
public:
    explicit DffCache(std::filesystem::path dir);
    std::optional<DecisiveMap> get(uint64_t sut_hash, uint64_t image_hash,
                                   uint64_t config_hash) const;
    void put(const DecisiveMap& map) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path key_path(uint64_t s, uint64_t i, uint64_t c) const;
    std::filesystem::path dir_;
};

// Mean of k_cf optimize_mask results over the substream seeds; bit-exact
// equal to averaging the individual masks in seed order. image_id
// disambiguates cache entries; pass the pair id + domain tag.
DecisiveMap decisive_map(const ReferenceSut& sut, const Image& x, const CfConfig& cfg,
                         const DffCache* cache = nullptr, int jobs = 1);

// MSE between the pooled maps. Both maps must come from the same SUT and
// config; mismatched provenance raises ConfigError.
double dff_distance(const DecisiveMap& a, const DecisiveMap& b);

uint64_t image_content_hash(const Image& img);

void save_decisive_map(const DecisiveMap& map, const std::filesystem::path& path);
DecisiveMap load_decisive_map(const std::filesystem::path& path);

}  // namespace mfid
