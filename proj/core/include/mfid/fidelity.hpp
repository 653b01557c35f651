#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfid/cf.hpp"
#include "mfid/numerics.hpp"
#include "mfid/sut.hpp"

namespace mfid {

struct Thresholds {
    double eps_in = 0.5;
    double ov_score_cutoff = 0.7;  // pass when ov_score >= cutoff
    double eps_dff = 0.3;
    std::optional<double> eps_lf;  // reported, never gating
    std::string provenance = "user";

    void validate() const;
};

struct FidelityRecord {
    std::string pair_id;
    std::string split;  // "calibration" | "heldout"
    double iv_distance = 0.0;
    double iv_score = 0.0;  // 1 - clamp(iv_distance, 0, 1)
    double ov_loss = 0.0;
    double ov_score = 0.0;
    std::map<int, double> lf_distances;  // per tap layer
    double dff = 0.0;
    bool pass_iv = false;
    bool pass_ov = false;
    bool pass_dff = false;
    bool pass_all = false;

    double lf_max() const;
};

struct IvCheckResult {
    double min_distance;
    size_t nearest_index;
    bool pass;
};

// Minimizes perceptual_distance over the empirical real-world candidate set;
// ties break toward the lowest index.
IvCheckResult iv_check(const Image& x_s, const std::vector<Image>& rw, double eps_in);

struct OvResult {
    double loss;
    double score;
};

// Steering: loss = squared angle difference, score = exp(-5 |dtheta|).
// Segmentation: masks at logit > 0, loss = 1 - IoU, score = IoU
// (IoU of two empty masks is 1).
OvResult ov_distance_and_score(SutKind kind, const SutOutput& out_s, const SutOutput& out_r);

struct LfCheckResult {
    std::map<int, double> distances;
    bool pass;
};

// MSE per tap layer; passes only when every layer is within eps_lf.
LfCheckResult lf_check(const LayerActivations& acts_s, const LayerActivations& acts_r,
                       double eps_lf);

// Empirical percentile with linear interpolation between closest order
// statistics (type 7). Requires at least 20 samples.
std::pair<double, double> calibrate_thresholds(std::vector<double> distances);
double percentile_type7(std::vector<double> values, double p);

double pass_rate(const std::vector<FidelityRecord>& records, double eps_dff);

struct AcceptabilityBreakdown {
    bool pass_iv, pass_ov, pass_dff;
    bool pass_all;
    std::optional<bool> pass_lf;  // informational only
};

// IV AND OV AND DFF; LF is reported but never gates the verdict.
AcceptabilityBreakdown acceptability(const FidelityRecord& rec, const Thresholds& th);

// Applies thresholds to a record in place (fills pass flags).
void apply_thresholds(FidelityRecord& rec, const Thresholds& th);

// Per-pair CSV with the fixed column set.
void write_records_csv(const std::vector<FidelityRecord>& records,
                       const std::filesystem::path& path);
std::vector<FidelityRecord> read_records_csv(const std::filesystem::path& path);

}  // namespace mfid
