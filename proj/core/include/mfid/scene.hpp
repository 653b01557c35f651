#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mfid/numerics.hpp"
#include "mfid/rng.hpp"

namespace mfid {

inline constexpr int kImageSize = 128;
inline constexpr int kHorizonRow = 44;

// Semantic scene specification shared by the real-style and synthetic-style
// renders. Values are range-checked by validate().
struct ScenarioDescription {
    double road_curvature = 0.0;          // 1/m, [-0.02, 0.02]
    int lane_count = 2;                   // 2..4
    double sun_elevation = 45.0;          // degrees, [5, 85]
    double obstacle_lateral_offset = 0.0; // m, [-3, 3]
    bool obstacle_present = false;
    bool decoy_sign_present = false;

    void validate() const;
    // Ordered attribute/value view (numeric encoding; booleans as 0/1).
    std::vector<std::pair<std::string, double>> attributes() const;
    // Numeric encoding normalized to roughly [-1, 1], used by the calibrator.
    std::vector<float> encode() const;
};

// Generator configuration: one discrete seed plus bounded continuous knobs.
// Continuous values are clamped to their ranges on construction.
struct GeneratorKnobs {
    uint64_t seed = 0;
    float style_strength = 1.f;  // [0, 1]
    float contrast = 1.f;        // [0.5, 1.5]
    float brightness = 0.f;      // [-0.3, 0.3]
    float blur_radius = 0.f;     // [0, 3] px
    float texture_gain = 1.f;    // [0, 1]

    static GeneratorKnobs clamped(uint64_t seed, float style, float contrast,
                                  float brightness, float blur, float texture);
    void clamp();
};

struct KnobBounds {
    float lo, hi;
    float mid() const { return 0.5f * (lo + hi); }
    float half() const { return 0.5f * (hi - lo); }
};
// Bounds in knob order: style_strength, contrast, brightness, blur, texture.
inline constexpr KnobBounds kKnobBounds[5] = {
    {0.f, 1.f}, {0.5f, 1.5f}, {-0.3f, 0.3f}, {0.f, 3.f}, {0.f, 1.f}};
inline constexpr int kContinuousKnobs = 5;

float knob_value(const GeneratorKnobs& k, int index);
void set_knob_value(GeneratorKnobs& k, int index, float value);

// Ground-truth geometry, independent of style and knobs.
struct Masks {
    Grid drivable;   // binary
    Grid lane;       // binary, interior dividers only
    Grid obstacle;   // binary, zero when obstacle_present is false
    double steering_label = 0.0;  // radians
};

struct IntRect {
    int y0, x0, y1, x1;  // half-open [y0,y1) x [x0,x1)
    bool contains(int y, int x) const { return y >= y0 && y < y1 && x >= x0 && x < x1; }
};

// Real-style render: full texture detail, gradient shading, mild sensor
// noise. Consumes exactly one u64 from rng (the scene texture seed), so the
// same draw can be replayed into GeneratorKnobs::seed.
Image render_real(const ScenarioDescription& sd, Rng& rng);

// Synthetic-style render: same geometry, flat-shaded with texture scaled by
// texture_gain; style_strength interpolates toward the real texture/shading
// model; contrast/brightness/blur applied as post-processing.
Image render_synthetic(const ScenarioDescription& sd, const GeneratorKnobs& knobs);

Masks render_masks(const ScenarioDescription& sd);

// Bounding region (inflated by the maximum blur kernel extent) outside of
// which toggling decoy_sign_present leaves every pixel untouched.
IntRect decoy_region();

struct ScenarioSampleOptions {
    double obstacle_probability = 0.6;
    double decoy_probability = 0.5;
};

// Low-discrepancy coverage of the attribute ranges (Kronecker sequence with
// a seeded offset); deterministic per seed.
std::vector<ScenarioDescription> sample_scenario_grid(int n, Rng& rng,
                                                      const ScenarioSampleOptions& opts = {});

// Calibration/held-out sizes for an n-item set at the given ratio.
std::pair<int, int> split_sizes(int n, double calibration_ratio = 0.8);

struct PairedSample {
    std::string id;
    ScenarioDescription sd;
    Image x_r;
    Image x_s_init;
    GeneratorKnobs knobs_init;
};

// Renders the pair for one scenario: x_r from the "real" substream of
// pair_rng, x_s from knob_template with a fresh seed drawn from the "knob"
// substream.
PairedSample make_paired_sample(const std::string& id, const ScenarioDescription& sd,
                                const Rng& pair_rng, const GeneratorKnobs& knob_template,
                                int rw_candidate = 0);

// Extra real-style candidates for k-candidate empirical real-world sets.
Image render_real_candidate(const ScenarioDescription& sd, const Rng& pair_rng, int candidate);

}  // namespace mfid
