#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mfid/calib.hpp"
#include "mfid/cf.hpp"
#include "mfid/fidelity.hpp"
#include "mfid/scene.hpp"
#include "mfid/stats.hpp"

namespace mfid {

// Parsed tool configuration. Plain text with bracketed sections
// ([scene], [cf], [fidelity], [calibration], [stats]) of key=value lines;
// '#' and ';' start comments. Unknown sections or keys are rejected.
struct RunConfig {
    // [scene]
    int n_pairs = 200;
    uint64_t seed = 7;
    double split_ratio = 0.8;
    ScenarioSampleOptions sample_opts;
    int rw_candidates = 1;
    GeneratorKnobs init_knobs =
        GeneratorKnobs::clamped(0, 0.35f, 1.f, 0.f, 0.8f, 0.55f);

    // [cf]
    CfConfig cf;

    // [fidelity]
    Thresholds thresholds;

    // [calibration]
    CalibrationConfig calibration;

    // [stats]
    BootstrapConfig bootstrap;
    double ni_margin_steering = -0.005;
    double ni_margin_segmentation = -0.010;

    static RunConfig defaults() { return RunConfig{}; }
    static RunConfig parse_file(const std::filesystem::path& path);
    static RunConfig parse_text(const std::string& text);

    // Canonical rendering of every effective value; its hash is embedded in
    // all outputs.
    std::string canonical() const;
    std::string config_hash() const;
};

}  // namespace mfid
