#include <doctest.h>

#include <cmath>

#include "mfid/numerics.hpp"
#include "mfid/rng.hpp"
#include "mfid/scene.hpp"

using namespace mfid;

namespace {

ScenarioDescription basic_sd() {
    ScenarioDescription sd;
    sd.road_curvature = 0.01;
    sd.lane_count = 3;
    sd.sun_elevation = 40.0;
    sd.obstacle_lateral_offset = 1.0;
    sd.obstacle_present = false;
    sd.decoy_sign_present = false;
    return sd;
}

// Counts connected runs of set pixels in one row of a binary mask.
int count_row_stripes(const Grid& mask, int row) {
    int runs = 0;
    bool in_run = false;
    for (int c = 0; c < mask.cols; ++c) {
        const bool on = mask.at(row, c) > 0.5f;
        if (on && !in_run) ++runs;
        in_run = on;
    }
    return runs;
}

// Erode by `r` (all neighbors within Chebyshev distance r must be set).
Grid erode(const Grid& m, int r) {
    Grid out = Grid::zeros(m.rows, m.cols);
    for (int y = r; y < m.rows - r; ++y)
        for (int x = r; x < m.cols - r; ++x) {
            bool all = true;
            for (int dy = -r; dy <= r && all; ++dy)
                for (int dx = -r; dx <= r && all; ++dx)
                    if (m.at(y + dy, x + dx) < 0.5f) all = false;
            out.at(y, x) = all ? 1.f : 0.f;
        }
    return out;
}

Grid dilate(const Grid& m, int r) {
    Grid out = Grid::zeros(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            bool any = false;
            for (int dy = -r; dy <= r && !any; ++dy)
                for (int dx = -r; dx <= r && !any; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy >= 0 && yy < m.rows && xx >= 0 && xx < m.cols &&
                        m.at(yy, xx) > 0.5f)
                        any = true;
                }
            out.at(y, x) = any ? 1.f : 0.f;
        }
    return out;
}

}  // namespace

TEST_CASE("render_real is deterministic per (sd, seed)") {
    const auto sd = basic_sd();
    Rng a(42), b(42);
    const Image ia = render_real(sd, a);
    const Image ib = render_real(sd, b);
    CHECK(ia.data == ib.data);
    Rng c(43);
    CHECK(render_real(sd, c).data != ia.data);
    CHECK_NOTHROW(ia.validate());
}

TEST_CASE("lane_count yields lane_count-1 interior divider stripes") {
    auto sd = basic_sd();
    sd.lane_count = 3;
    const Masks m = render_masks(sd);
    // scan rows well below the horizon where stripes are separated
    for (int row : {80, 100, 120}) CHECK(count_row_stripes(m.lane, row) == 2);
    sd.lane_count = 4;
    const Masks m4 = render_masks(sd);
    for (int row : {80, 100, 120}) CHECK(count_row_stripes(m4.lane, row) == 3);
    sd.lane_count = 2;
    const Masks m2 = render_masks(sd);
    for (int row : {80, 100, 120}) CHECK(count_row_stripes(m2.lane, row) == 1);
}

TEST_CASE("obstacle mask is empty when obstacle_present=false") {
    auto sd = basic_sd();
    sd.obstacle_present = false;
    const Masks m = render_masks(sd);
    for (float v : m.obstacle.v) CHECK(v == 0.f);
    sd.obstacle_present = true;
    const Masks mo = render_masks(sd);
    double mass = 0;
    for (float v : mo.obstacle.v) mass += v;
    CHECK(mass > 0);
}

TEST_CASE("steering label geometry") {
    auto sd = basic_sd();
    sd.road_curvature = 0.0;
    sd.obstacle_present = false;
    CHECK(render_masks(sd).steering_label == doctest::Approx(0.0));

    sd.road_curvature = 0.015;
    CHECK(render_masks(sd).steering_label == doctest::Approx(std::atan(10.0 * 0.015)));

    // mirroring negates the label, with and without obstacle
    for (bool obs : {false, true}) {
        ScenarioDescription s1 = basic_sd();
        s1.obstacle_present = obs;
        s1.road_curvature = 0.012;
        s1.obstacle_lateral_offset = 1.7;
        ScenarioDescription s2 = s1;
        s2.road_curvature = -s1.road_curvature;
        s2.obstacle_lateral_offset = -s1.obstacle_lateral_offset;
        CHECK(render_masks(s2).steering_label ==
              doctest::Approx(-render_masks(s1).steering_label));
    }
}

TEST_CASE("drivable mask covers at least 20% of pixels across the sd grid") {
    Rng rng(77);
    const auto sds = sample_scenario_grid(100, rng);
    for (const auto& sd : sds) {
        const Masks m = render_masks(sd);
        double frac = 0;
        for (float v : m.drivable.v) frac += v;
        frac /= static_cast<double>(m.drivable.size());
        CHECK(frac >= 0.20);
        // lane dividers lie inside the drivable region
        for (size_t i = 0; i < m.lane.size(); ++i)
            if (m.lane.v[i] > 0.5f) CHECK(m.drivable.v[i] == 1.f);
    }
}

TEST_CASE("perfect knobs reproduce the real render closely") {
    const auto sd = basic_sd();
    Rng probe(2024);
    const uint64_t scene_seed = probe.next_u64();  // render_real consumes one u64
    Rng r(2024);
    const Image real = render_real(sd, r);
    const GeneratorKnobs perfect = GeneratorKnobs::clamped(scene_seed, 1.f, 1.f, 0.f, 0.f, 1.f);
    const Image synth = render_synthetic(sd, perfect);
    CHECK(perceptual_distance(synth, real) < 0.05);
}

TEST_CASE("texture_gain=0 produces a flat asphalt region") {
    auto sd = basic_sd();
    sd.obstacle_present = false;
    sd.decoy_sign_present = false;
    const GeneratorKnobs knobs = GeneratorKnobs::clamped(9, 0.55f, 1.f, 0.f, 0.f, 0.f);
    const Image img = render_synthetic(sd, knobs);
    const Masks m = render_masks(sd);

    const Grid interior = erode(m.drivable, 3);
    const Grid stripe_zone = dilate(m.lane, 3);
    double mean = 0.0, var = 0.0;
    int n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (interior.at(y, x) > 0.5f && stripe_zone.at(y, x) < 0.5f) {
                mean += img.at(y, x, 0);
                ++n;
            }
    REQUIRE(n > 500);
    mean /= n;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (interior.at(y, x) > 0.5f && stripe_zone.at(y, x) < 0.5f) {
                const double d = img.at(y, x, 0) - mean;
                var += d * d;
            }
    var /= n;
    CHECK(var < 1e-4);
}

TEST_CASE("brightness knob shifts the mean by its value on a flat render") {
    auto sd = basic_sd();
    sd.sun_elevation = 30.0;
    sd.decoy_sign_present = false;
    const GeneratorKnobs k0 = GeneratorKnobs::clamped(5, 0.f, 1.f, 0.f, 0.f, 0.f);
    const GeneratorKnobs k3 = GeneratorKnobs::clamped(5, 0.f, 1.f, 0.3f, 0.f, 0.f);
    const Image a = render_synthetic(sd, k0);
    const Image b = render_synthetic(sd, k3);
    double ma = 0, mb = 0;
    for (float v : a.data) ma += v;
    for (float v : b.data) mb += v;
    ma /= static_cast<double>(a.data.size());
    mb /= static_cast<double>(b.data.size());
    CHECK(std::abs((mb - ma) - 0.3) < 0.02);
}

TEST_CASE("perceptual distance to real is non-increasing in style_strength on average") {
    Rng root(31337);
    double total_lo = 0.0, total_mid = 0.0, total_hi = 0.0;
    const auto sds = sample_scenario_grid(50, root);
    for (int i = 0; i < 50; ++i) {
        Rng probe(1000 + static_cast<uint64_t>(i));
        const uint64_t seed = probe.next_u64();
        Rng pr(1000 + static_cast<uint64_t>(i));
        const Image real = render_real(sds[static_cast<size_t>(i)], pr);
        auto dist_at = [&](float s) {
            const GeneratorKnobs k = GeneratorKnobs::clamped(seed, s, 1.f, 0.f, 0.f, 1.f);
            return perceptual_distance(render_synthetic(sds[static_cast<size_t>(i)], k), real);
        };
        total_lo += dist_at(0.1f);
        total_mid += dist_at(0.5f);
        total_hi += dist_at(0.9f);
    }
    CHECK(total_lo >= total_mid);
    CHECK(total_mid >= total_hi);
}

TEST_CASE("decoy sign changes pixels only inside its bounding region") {
    auto sd = basic_sd();
    sd.obstacle_present = true;
    const IntRect region = decoy_region();
    for (const GeneratorKnobs& knobs :
         {GeneratorKnobs::clamped(3, 0.4f, 1.1f, 0.05f, 2.0f, 0.7f),
          GeneratorKnobs::clamped(3, 1.f, 1.f, 0.f, 0.f, 1.f),
          GeneratorKnobs::clamped(3, 0.f, 0.9f, -0.1f, 3.0f, 0.f)}) {
        ScenarioDescription with = sd, without = sd;
        with.decoy_sign_present = true;
        without.decoy_sign_present = false;
        const Image iw = render_synthetic(with, knobs);
        const Image io = render_synthetic(without, knobs);
        double outside_mse = 0.0;
        int inside_diff = 0;
        for (int y = 0; y < iw.height; ++y)
            for (int x = 0; x < iw.width; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double d = static_cast<double>(iw.at(y, x, c)) - io.at(y, x, c);
                    if (region.contains(y, x))
                        inside_diff += d != 0.0;
                    else
                        outside_mse += d * d;
                }
        CHECK(outside_mse == 0.0);
        CHECK(inside_diff > 0);
    }
}

TEST_CASE("real render also confines decoy changes to the region") {
    auto with = basic_sd();
    with.decoy_sign_present = true;
    auto without = with;
    without.decoy_sign_present = false;
    Rng r1(5), r2(5);
    const Image iw = render_real(with, r1);
    const Image io = render_real(without, r2);
    const IntRect region = decoy_region();
    for (int y = 0; y < iw.height; ++y)
        for (int x = 0; x < iw.width; ++x)
            if (!region.contains(y, x))
                for (int c = 0; c < 3; ++c) CHECK(iw.at(y, x, c) == io.at(y, x, c));
}

TEST_CASE("sample_scenario_grid determinism, ranges, and split sizes") {
    Rng a(11), b(11);
    const auto s1 = sample_scenario_grid(10, a);
    const auto s2 = sample_scenario_grid(10, b);
    REQUIRE(s1.size() == 10);
    for (size_t i = 0; i < 10; ++i) {
        CHECK(s1[i].road_curvature == s2[i].road_curvature);
        CHECK(s1[i].lane_count == s2[i].lane_count);
        CHECK(s1[i].sun_elevation == s2[i].sun_elevation);
        CHECK(s1[i].obstacle_present == s2[i].obstacle_present);
        CHECK(s1[i].decoy_sign_present == s2[i].decoy_sign_present);
    }

    Rng c(123);
    for (const auto& sd : sample_scenario_grid(500, c)) CHECK_NOTHROW(sd.validate());

    CHECK(split_sizes(2126) == std::pair{1701, 425});
    CHECK(split_sizes(20) == std::pair{16, 4});
    CHECK(split_sizes(200) == std::pair{160, 40});
}

TEST_CASE("scenario validation rejects out-of-range attributes") {
    auto sd = basic_sd();
    sd.road_curvature = 0.05;
    CHECK_THROWS_AS(sd.validate(), ValidationError);
    Rng rng(1);
    CHECK_THROWS_AS((void)render_real(sd, rng), ValidationError);
    sd = basic_sd();
    sd.lane_count = 7;
    CHECK_THROWS_AS(sd.validate(), ValidationError);
    sd = basic_sd();
    sd.sun_elevation = 1.0;
    CHECK_THROWS_AS(sd.validate(), ValidationError);
}

TEST_CASE("generator knobs clamp to bounds on construction") {
    const GeneratorKnobs k = GeneratorKnobs::clamped(1, 2.f, 0.1f, -0.9f, 9.f, -0.5f);
    CHECK(k.style_strength == 1.f);
    CHECK(k.contrast == 0.5f);
    CHECK(k.brightness == -0.3f);
    CHECK(k.blur_radius == 3.f);
    CHECK(k.texture_gain == 0.f);
}

TEST_CASE("paired samples share shape and are reproducible") {
    const auto sd = basic_sd();
    Rng root(88);
    const Rng pair_rng = root.split("pair", 0);
    const GeneratorKnobs tmpl = GeneratorKnobs::clamped(0, 0.4f, 1.f, 0.f, 0.5f, 0.6f);
    const PairedSample p1 = make_paired_sample("p0", sd, pair_rng, tmpl);
    const PairedSample p2 = make_paired_sample("p0", sd, pair_rng, tmpl);
    CHECK(p1.x_r.same_shape(p1.x_s_init));
    CHECK(p1.x_r.data == p2.x_r.data);
    CHECK(p1.x_s_init.data == p2.x_s_init.data);
    CHECK(p1.knobs_init.seed == p2.knobs_init.seed);
}
