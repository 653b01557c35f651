#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mfid/runconfig.hpp"
#include "mfid/sut.hpp"

namespace mfid {

// Orchestration behind the CLI subcommands. Throws ConfigError /
// ValidationError (usage, exit 1), IoError (exit 2), NumericError (exit 3);
// the CLI maps them to exit codes.
struct PipelineOptions {
    RunConfig config;
    std::filesystem::path out_dir;
    SutTask sut_task = SutTask::steer;
    std::string variant = "dff";          // calibrate: "ovf" | "dff"
    std::string thresholds_mode = "user"; // "user" | "percentile:p1,p2"
    int jobs = 1;
    std::filesystem::path cache_dir;      // decisive maps + SUT weights
    std::ostream* log = nullptr;
    TrainRecipe sut_recipe;               // reference SUT training recipe
};

// Renders all pairs and writes images plus the dataset manifest;
// deterministic and idempotent for a fixed config/seed.
std::filesystem::path cmd_generate(const PipelineOptions& opts);

// IV/OV/LF/DFF per pair, thresholding (user or percentile-calibrated),
// pass-rates and correlation tables; writes pairs.csv and aggregate.json.
std::filesystem::path cmd_evaluate(const PipelineOptions& opts,
                                   const std::filesystem::path& manifest_path);

// Trains the chosen calibration variant on the calibration split, then runs
// the held-out before/after evaluation (effect table + non-inferiority).
std::filesystem::path cmd_calibrate(const PipelineOptions& opts,
                                    const std::filesystem::path& manifest_path);

// Renders plain-text tables and CDF sample points from evaluation outputs;
// refuses inputs with mismatched config hashes.
std::filesystem::path cmd_report(const PipelineOptions& opts,
                                 const std::vector<std::filesystem::path>& inputs);

// Shared helpers ------------------------------------------------------------

std::filesystem::path resolve_cache_dir(const std::filesystem::path& out_dir);
std::filesystem::path sut_weights_path(const std::filesystem::path& cache_dir, SutTask task);
double ni_margin_for(const RunConfig& cfg, SutTask task);

}  // namespace mfid
