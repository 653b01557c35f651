#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "mfid/cf.hpp"
#include "mfid/scene.hpp"
#include "mfid/sut.hpp"

namespace mfid {

// Small dense network mapping (feature summary of x_s_init, encoded SD) to
// continuous knob values via tanh scaling into the knob ranges, plus the
// ES-selected generator seed. 38 -> 32 -> 5.
struct CalibratorParams {
    std::vector<float> w1, b1, w2, b2;
    uint64_t gen_seed = 0;

    static constexpr int kInputDim = 38;
    static constexpr int kHiddenDim = 32;
    static constexpr int kOutputDim = kContinuousKnobs;

    uint64_t weights_hash() const;
};

struct CalibrationConfig {
    int total_steps = 2000;   // desk default; the reference schedule uses 22000
    double beta = 0.3;
    double lambda_dff = 0.08;
    int dff_every = 3;
    int es_population = 32;
    double es_sigma = 0.1;
    int es_every = 50;
    double lr_primary = 5e-3;  // style_strength
    double lr_post = 1e-3;     // contrast/brightness/blur/texture_gain
    double fd_h = 1e-3;
    int checkpoint_every = 200;
    // CF profiles: loss term (reduced), knob-gradient probes, ES fitness.
    CfConfig cf_loss;
    CfConfig cf_grad;
    CfConfig cf_es;
    GeneratorKnobs knob_template;  // initial-prediction anchor

    CalibrationConfig();
    uint64_t hash() const;
};

inline constexpr int kReferenceTotalSteps = 22000;

struct TrainLogEntry {
    int step;
    double l_recon;
    double l_ov;
    double l_dff;  // last computed value, held between refresh steps
    double l_total;
    bool dff_fresh;
    uint64_t knob_hash;
};

struct CombinedLoss {
    double recon;
    double ov;
    std::optional<double> dff;  // present only when freshly computed
    double total;
};

// L_total = L_recon + beta * L_ov + lambda_dff * L_dff, where L_dff is
// recomputed under the reduced CF profile when compute_dff is set and held
// at `held_dff` otherwise.
CombinedLoss combined_loss(const Image& x_s, const Image& x_r, const ReferenceSut& sut,
                           const CalibrationConfig& cfg, bool compute_dff,
                           double held_dff = 0.0, const DffCache* cache = nullptr,
                           int jobs = 1);

using FitnessFn = std::function<double(const GeneratorKnobs&)>;

// One ES refresh of the generator seed: evaluates the incumbent seed at the
// base knobs plus population-1 candidate seeds with sigma-scaled continuous
// jitter, adopting the argmin; ties keep the incumbent.
uint64_t es_step(const ScenarioDescription& sd, const GeneratorKnobs& knobs,
                 const FitnessFn& fitness, Rng& rng, int population = 32, double sigma = 0.1);

// One projected SGD step on the continuous knobs: style_strength uses
// lr_primary, the post-processing knobs lr_post; the result is clamped to
// the knob bounds. Gradients come from finite differences through the
// renderer, never through SUT weights.
GeneratorKnobs sgd_step(const GeneratorKnobs& knobs, const std::array<double, 5>& grad,
                        const CalibrationConfig& cfg);

GeneratorKnobs predict_knobs(const CalibratorParams& params, const Image& x_s_init,
                             const ScenarioDescription& sd);

CalibratorParams init_calibrator(const CalibrationConfig& cfg, Rng& rng);

struct TrainOptions {
    std::filesystem::path checkpoint_path;  // empty disables checkpointing
    int stop_after = 0;                     // >0: stop early (resume test hook)
    const DffCache* map_cache = nullptr;
    int jobs = 1;
    std::ostream* progress = nullptr;
};

struct TrainResult {
    CalibratorParams params;
    std::vector<TrainLogEntry> log;
    int last_step = 0;
};

// Algorithm: sample a pair, synthesize via the calibrator-predicted knobs,
// take the combined loss (DFF refreshed every dff_every steps), update the
// calibrator through the knob path only, and refresh the seed by ES every
// es_every steps. The SUT is frozen; its checksum is asserted unchanged.
TrainResult train_calibrator(const std::vector<PairedSample>& dataset, const ReferenceSut& sut,
                             const CalibrationConfig& cfg, const Rng& rng,
                             const TrainOptions& opts = {});

struct CalibratedSample {
    Image x_s;
    GeneratorKnobs knobs;
};

// Inference uses only the synthetic context (x_s_init, SD); no real image
// enters this path.
CalibratedSample apply_calibrator(const CalibratorParams& params, const PairedSample& sample);

// Checkpoint: magic "MFCK", config hash, step, eta weights (float32),
// generator seed, held DFF value, rng state, CRC32.
struct Checkpoint {
    uint64_t config_hash;
    int step;
    CalibratorParams params;
    double held_dff;
    uint64_t rng_key;
    uint64_t rng_counter;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_train_log_csv(const std::vector<TrainLogEntry>& log,
                         const std::filesystem::path& path, bool append = false);

// Feature summary of x_s_init: 16 pooled intensity means + 16 pooled
// gradient-magnitude means (scaled), 4x4 each.
std::vector<float> image_feature_summary(const Image& img);

}  // namespace mfid
