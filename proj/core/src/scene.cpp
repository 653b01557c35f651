#include "mfid/scene.hpp"

#include <algorithm>
#include <cmath>

#include "mfid/hashing.hpp"

namespace mfid {

namespace {

constexpr int kH = kImageSize;
constexpr int kW = kImageSize;
constexpr int kH0 = kHorizonRow;

constexpr double kPi = 3.14159265358979323846;
constexpr double kLookaheadM = 10.0;
constexpr double kCurveGain = 8.0;          // px shift = gain * W * curvature * (1-t)^2
constexpr float kRoadHalfNear = 3.f;        // half-width at the horizon, px
constexpr float kRoadHalfFar = 46.f;        // half-width at the bottom row, px
constexpr double kObstacleDepth = 0.42;     // t of the obstacle base
constexpr float kSensorNoise = 0.02f;

// Decoy sign placement; region inflated by the max blur kernel extent (8 px).
constexpr int kSignCx = 104, kSignCy = 34, kSignHalf = 7;
constexpr int kPoleX0 = 103, kPoleX1 = 106, kPoleY1 = 51;

struct StyleParams {
    float texture;      // texture field amplitude scale
    float flatness;     // 0 = real shading, 1 = flat shading
    float noise_sigma;  // sensor noise
    float style_mix;    // 0 = coarse synthetic texture model, 1 = real model
};

float depth_of_row(int y) {
    return static_cast<float>(y - kH0) / static_cast<float>(kH - 1 - kH0);
}

float road_half_width(float t) { return kRoadHalfNear + (kRoadHalfFar - kRoadHalfNear) * t; }

float road_center(const ScenarioDescription& sd, float t) {
    const float s = 1.f - t;
    return 0.5f * kW +
           static_cast<float>(kCurveGain * kW * sd.road_curvature) * s * s;
}

// Position-keyed hash noise in [-1, 1): independent of draw order, so scene
// elements can be toggled without shifting the texture field.
float hash_noise(uint64_t seed, uint64_t salt, int64_t x, int64_t y) {
    const uint64_t h = mix64(mix64(seed ^ salt) ^
                             (static_cast<uint64_t>(x) << 20) ^
                             (static_cast<uint64_t>(y) & 0xfffffull));
    return static_cast<float>(h >> 11) * 0x1.0p-52f - 1.f;
}

float smoothstep(float u) { return u * u * (3.f - 2.f * u); }

// One octave of value noise with lattice spacing `cell`.
float value_noise(uint64_t seed, uint64_t salt, int x, int y, int cell) {
    const int xi = x / cell, yi = y / cell;
    const float ux = smoothstep(static_cast<float>(x % cell) / static_cast<float>(cell));
    const float uy = smoothstep(static_cast<float>(y % cell) / static_cast<float>(cell));
    const float n00 = hash_noise(seed, salt, xi, yi);
    const float n10 = hash_noise(seed, salt, xi + 1, yi);
    const float n01 = hash_noise(seed, salt, xi, yi + 1);
    const float n11 = hash_noise(seed, salt, xi + 1, yi + 1);
    return (1.f - uy) * ((1.f - ux) * n00 + ux * n10) + uy * ((1.f - ux) * n01 + ux * n11);
}

// Texture field interpolating between a single coarse octave (synthetic
// model) and a three-octave rich field (real model).
float texture_field(uint64_t seed, int x, int y, float style_mix) {
    const float o0 = value_noise(seed, 0x74657830ull, x, y, 16);
    const float o1 = value_noise(seed, 0x74657831ull, x, y, 8);
    const float o2 = value_noise(seed, 0x74657832ull, x, y, 4);
    const float real = 0.5f * o0 + 0.3f * o1 + 0.2f * o2;
    return o0 + style_mix * (real - o0);
}

struct Rgb {
    float r, g, b;
    Rgb operator*(float s) const { return {r * s, g * s, b * s}; }
    Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
};

Rgb lerp(const Rgb& a, const Rgb& b, float u) {
    return {a.r + u * (b.r - a.r), a.g + u * (b.g - a.g), a.b + u * (b.b - a.b)};
}

Image render_scene(const ScenarioDescription& sd, uint64_t seed, const StyleParams& st) {
    sd.validate();
    Image img = Image::zeros(kH, kW, 3);

    const float sunfac =
        0.55f + 0.45f * static_cast<float>(std::sin(sd.sun_elevation * kPi / 180.0));
    const Rgb sky_zenith = Rgb{0.36f, 0.50f, 0.72f} * sunfac;
    const Rgb sky_horizon = Rgb{0.66f, 0.70f, 0.76f} * sunfac;
    const Rgb sky_flat = lerp(sky_zenith, sky_horizon, 0.5f);
    const Rgb grass = Rgb{0.22f, 0.34f, 0.16f} * sunfac;
    const Rgb asphalt = Rgb{0.33f, 0.33f, 0.35f} * sunfac;
    const Rgb edge_line = Rgb{0.80f, 0.80f, 0.78f} * sunfac;
    const Rgb divider = Rgb{0.78f, 0.74f, 0.55f} * sunfac;

    const float sun_x = 96.f;
    const float sun_y = static_cast<float>(kH0) *
                        (1.f - static_cast<float>(sd.sun_elevation) / 95.f);
    const float glow_amp = 0.20f * sunfac * (1.f - st.flatness);

    for (int y = 0; y < kH; ++y) {
        const bool ground = y >= kH0;
        const float t = ground ? depth_of_row(y) : 0.f;
        const float xc = road_center(sd, t);
        const float hw = road_half_width(t);
        for (int x = 0; x < kW; ++x) {
            Rgb px{};
            float tex_amp = 0.f;
            if (!ground) {
                const float u = static_cast<float>(kH0 - y) / static_cast<float>(kH0);
                const Rgb graded = lerp(sky_horizon, sky_zenith, u);
                px = lerp(graded, sky_flat, st.flatness);
            } else {
                const float dx = static_cast<float>(x) - xc;
                if (std::abs(dx) <= hw) {
                    px = asphalt;
                    tex_amp = 0.09f;
                    // outer edge lines (image only, not in the lane mask)
                    if (std::abs(std::abs(dx) - hw) <= 1.f) px = edge_line;
                    for (int i = 1; i < sd.lane_count; ++i) {
                        const float f = 2.f * static_cast<float>(i) /
                                            static_cast<float>(sd.lane_count) - 1.f;
                        if (std::abs(dx - f * hw) <= 1.f) px = divider;
                    }
                } else {
                    px = grass;
                    tex_amp = 0.07f;
                }
            }
            if (tex_amp > 0.f && st.texture > 0.f) {
                const float f = texture_field(seed, x, y, st.style_mix);
                const float v = f * tex_amp * st.texture;
                px = px + Rgb{v, v, v};
            }
            // additive sun glow, suppressed under flat shading
            if (glow_amp > 0.f) {
                const float dx = static_cast<float>(x) - sun_x;
                const float dy = static_cast<float>(y) - sun_y;
                const float g = glow_amp * std::exp(-(dx * dx + dy * dy) / (2.f * 9.f * 9.f));
                px = px + Rgb{g, g, 0.85f * g};
            }
            img.at(y, x, 0) = px.r;
            img.at(y, x, 1) = px.g;
            img.at(y, x, 2) = px.b;
        }
    }

    if (sd.obstacle_present) {
        const float t = static_cast<float>(kObstacleDepth);
        const int yb = kH0 + static_cast<int>(std::lround(
                                 t * static_cast<float>(kH - 1 - kH0)));
        const float hw = road_half_width(t);
        const float half_road_m = 1.75f * static_cast<float>(sd.lane_count);
        const float off_px =
            static_cast<float>(sd.obstacle_lateral_offset) / half_road_m * hw;
        const int xc = static_cast<int>(std::lround(road_center(sd, t) + off_px));
        const int box_h = 14, box_hw = 8;
        const Rgb body = Rgb{0.16f, 0.17f, 0.20f} * sunfac;
        for (int y = std::max(0, yb - box_h); y < std::min(kH, yb); ++y) {
            const float rel = static_cast<float>(y - (yb - box_h)) / box_h;
            const float shade = 1.f + (1.f - st.flatness) * (0.45f * rel - 0.2f);
            for (int x = std::max(0, xc - box_hw); x < std::min(kW, xc + box_hw); ++x) {
                Rgb px = body * shade;
                if (rel < 0.18f) px = Rgb{0.55f, 0.25f, 0.22f} * sunfac;  // tail band
                img.at(y, x, 0) = px.r;
                img.at(y, x, 1) = px.g;
                img.at(y, x, 2) = px.b;
            }
        }
    }

    if (sd.decoy_sign_present) {
        const Rgb pole = Rgb{0.25f, 0.25f, 0.27f} * sunfac;
        for (int y = kSignCy + kSignHalf; y < kPoleY1; ++y)
            for (int x = kPoleX0; x < kPoleX1; ++x) {
                img.at(y, x, 0) = pole.r;
                img.at(y, x, 1) = pole.g;
                img.at(y, x, 2) = pole.b;
            }
        const float bright = 0.8f + 0.2f * sunfac;
        for (int y = kSignCy - kSignHalf; y <= kSignCy + kSignHalf; ++y)
            for (int x = kSignCx - kSignHalf; x <= kSignCx + kSignHalf; ++x) {
                const int d = std::max(std::abs(y - kSignCy), std::abs(x - kSignCx));
                const Rgb px = (d >= kSignHalf - 1 ? Rgb{0.92f, 0.92f, 0.90f}
                                                   : Rgb{0.85f, 0.12f, 0.10f}) *
                               bright;
                img.at(y, x, 0) = px.r;
                img.at(y, x, 1) = px.g;
                img.at(y, x, 2) = px.b;
            }
    }

    if (st.noise_sigma > 0.f) {
        for (int y = 0; y < kH; ++y)
            for (int x = 0; x < kW; ++x)
                for (int c = 0; c < 3; ++c)
                    img.at(y, x, c) += st.noise_sigma *
                                       hash_noise(seed, 0x6e6f6973ull + static_cast<uint64_t>(c),
                                                  x, y);
    }

    for (auto& v : img.data) v = clamp01(v);
    return img;
}

}  // namespace

void ScenarioDescription::validate() const {
    if (!(road_curvature >= -0.02 && road_curvature <= 0.02))
        throw ValidationError("road_curvature outside [-0.02, 0.02]");
    if (lane_count < 2 || lane_count > 4)
        throw ValidationError("lane_count outside 2..4");
    if (!(sun_elevation >= 5.0 && sun_elevation <= 85.0))
        throw ValidationError("sun_elevation outside [5, 85]");
    if (!(obstacle_lateral_offset >= -3.0 && obstacle_lateral_offset <= 3.0))
        throw ValidationError("obstacle_lateral_offset outside [-3, 3]");
}

std::vector<std::pair<std::string, double>> ScenarioDescription::attributes() const {
    return {{"road_curvature", road_curvature},
            {"lane_count", static_cast<double>(lane_count)},
            {"sun_elevation", sun_elevation},
            {"obstacle_lateral_offset", obstacle_lateral_offset},
            {"obstacle_present", obstacle_present ? 1.0 : 0.0},
            {"decoy_sign_present", decoy_sign_present ? 1.0 : 0.0}};
}

std::vector<float> ScenarioDescription::encode() const {
    return {static_cast<float>(road_curvature / 0.02),
            static_cast<float>(lane_count - 3),
            static_cast<float>((sun_elevation - 45.0) / 40.0),
            static_cast<float>(obstacle_lateral_offset / 3.0),
            obstacle_present ? 1.f : -1.f,
            decoy_sign_present ? 1.f : -1.f};
}

GeneratorKnobs GeneratorKnobs::clamped(uint64_t seed, float style, float contrast_,
                                       float brightness_, float blur, float texture) {
    GeneratorKnobs k;
    k.seed = seed;
    k.style_strength = style;
    k.contrast = contrast_;
    k.brightness = brightness_;
    k.blur_radius = blur;
    k.texture_gain = texture;
    k.clamp();
    return k;
}

void GeneratorKnobs::clamp() {
    for (int i = 0; i < kContinuousKnobs; ++i)
        set_knob_value(*this, i,
                       std::clamp(knob_value(*this, i), kKnobBounds[i].lo, kKnobBounds[i].hi));
}

float knob_value(const GeneratorKnobs& k, int index) {
    switch (index) {
        case 0: return k.style_strength;
        case 1: return k.contrast;
        case 2: return k.brightness;
        case 3: return k.blur_radius;
        case 4: return k.texture_gain;
        default: throw ValidationError("knob index out of range");
    }
}

void set_knob_value(GeneratorKnobs& k, int index, float value) {
    switch (index) {
        case 0: k.style_strength = value; break;
        case 1: k.contrast = value; break;
        case 2: k.brightness = value; break;
        case 3: k.blur_radius = value; break;
        case 4: k.texture_gain = value; break;
        default: throw ValidationError("knob index out of range");
    }
}

Image render_real(const ScenarioDescription& sd, Rng& rng) {
    const uint64_t seed = rng.next_u64();
    StyleParams st{1.f, 0.f, kSensorNoise, 1.f};
    return render_scene(sd, seed, st);
}

Image render_synthetic(const ScenarioDescription& sd, const GeneratorKnobs& knobs_in) {
    GeneratorKnobs knobs = knobs_in;
    knobs.clamp();
    StyleParams st;
    st.texture = knobs.texture_gain;
    st.flatness = 1.f - knobs.style_strength;
    st.style_mix = knobs.style_strength;
    st.noise_sigma = kSensorNoise * knobs.style_strength * knobs.texture_gain;
    Image img = render_scene(sd, knobs.seed, st);
    for (auto& v : img.data)
        v = (v - 0.5f) * knobs.contrast + 0.5f + knobs.brightness;
    img = gaussian_blur(img, knobs.blur_radius);
    for (auto& v : img.data) v = clamp01(v);
    return img;
}

Masks render_masks(const ScenarioDescription& sd) {
    sd.validate();
    Masks m;
    m.drivable = Grid::zeros(kH, kW);
    m.lane = Grid::zeros(kH, kW);
    m.obstacle = Grid::zeros(kH, kW);

    for (int y = kH0; y < kH; ++y) {
        const float t = depth_of_row(y);
        const float xc = road_center(sd, t);
        const float hw = road_half_width(t);
        for (int x = 0; x < kW; ++x) {
            const float dx = static_cast<float>(x) - xc;
            if (std::abs(dx) <= hw) {
                m.drivable.at(y, x) = 1.f;
                for (int i = 1; i < sd.lane_count; ++i) {
                    const float f = 2.f * static_cast<float>(i) /
                                        static_cast<float>(sd.lane_count) - 1.f;
                    if (std::abs(dx - f * hw) <= 1.f) m.lane.at(y, x) = 1.f;
                }
            }
        }
    }

    if (sd.obstacle_present) {
        const float t = static_cast<float>(kObstacleDepth);
        const int yb = kH0 + static_cast<int>(std::lround(
                                 t * static_cast<float>(kH - 1 - kH0)));
        const float hw = road_half_width(t);
        const float half_road_m = 1.75f * static_cast<float>(sd.lane_count);
        const float off_px =
            static_cast<float>(sd.obstacle_lateral_offset) / half_road_m * hw;
        const int xc = static_cast<int>(std::lround(road_center(sd, t) + off_px));
        for (int y = std::max(0, yb - 14); y < std::min(kH, yb); ++y)
            for (int x = std::max(0, xc - 8); x < std::min(kW, xc + 8); ++x)
                m.obstacle.at(y, x) = 1.f;
    }

    m.steering_label = std::atan(kLookaheadM * sd.road_curvature);
    if (sd.obstacle_present)
        m.steering_label += -0.15 * std::sin(kPi * sd.obstacle_lateral_offset / 3.0);
    return m;
}

IntRect decoy_region() {
    return IntRect{kSignCy - kSignHalf - 8, kSignCx - kSignHalf - 8,
                   kPoleY1 + 8, kSignCx + kSignHalf + 1 + 8};
}

std::vector<ScenarioDescription> sample_scenario_grid(int n, Rng& rng,
                                                      const ScenarioSampleOptions& opts) {
    if (n < 1) throw ValidationError("sample_scenario_grid: n must be >= 1");
    // Kronecker sequence: frac(offset + i * alpha) with irrational alphas.
    static const double alphas[6] = {
        0.41421356237309515, 0.7320508075688772, 0.23606797749978969,
        0.6457513110645906,  0.3166247903553998, 0.6055512754639893};
    double offsets[6];
    for (double& o : offsets) o = rng.next_double();

    std::vector<ScenarioDescription> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double u[6];
        for (int k = 0; k < 6; ++k) {
            const double v = offsets[k] + static_cast<double>(i) * alphas[k];
            u[k] = v - std::floor(v);
        }
        ScenarioDescription sd;
        sd.road_curvature = -0.02 + 0.04 * u[0];
        sd.lane_count = 2 + std::min(2, static_cast<int>(u[1] * 3.0));
        sd.sun_elevation = 5.0 + 80.0 * u[2];
        sd.obstacle_lateral_offset = -3.0 + 6.0 * u[3];
        sd.obstacle_present = u[4] < opts.obstacle_probability;
        sd.decoy_sign_present = u[5] < opts.decoy_probability;
        out.push_back(sd);
    }
    return out;
}

std::pair<int, int> split_sizes(int n, double calibration_ratio) {
    const int cal = static_cast<int>(std::lround(static_cast<double>(n) * calibration_ratio));
    return {cal, n - cal};
}

PairedSample make_paired_sample(const std::string& id, const ScenarioDescription& sd,
                                const Rng& pair_rng, const GeneratorKnobs& knob_template,
                                int rw_candidate) {
    PairedSample p;
    p.id = id;
    p.sd = sd;
    p.x_r = render_real_candidate(sd, pair_rng, rw_candidate);
    p.knobs_init = knob_template;
    Rng krng = pair_rng.split("knob", 0);
    p.knobs_init.seed = krng.next_u64();
    p.x_s_init = render_synthetic(sd, p.knobs_init);
    return p;
}

Image render_real_candidate(const ScenarioDescription& sd, const Rng& pair_rng, int candidate) {
    Rng r = pair_rng.split("real", static_cast<uint64_t>(candidate));
    return render_real(sd, r);
}

}  // namespace mfid
