#pragma once

#include <cstdint>
#include <vector>

#include "mfid/fidelity.hpp"

namespace mfid {

struct BootstrapConfig {
    int resamples = 2000;
    uint64_t seed = 4242;
};

struct CorrelationResult {
    double rho;
    double ci_low;
    double ci_high;
    int n;
};

// Spearman rank correlation: average ranks for ties, Pearson on ranks;
// 95% CI by seeded pair-resampling bootstrap (percentile method).
CorrelationResult spearman(const std::vector<double>& xs, const std::vector<double>& ys,
                           const BootstrapConfig& cfg = {});

struct NiResult {
    double delta_mean;
    double ci_low_one_sided;  // one-sided 95% lower bound on the mean
    double margin;
    bool pass;  // ci_low_one_sided > margin
};

// One-sided non-inferiority test with a pre-declared margin; the lower
// confidence bound comes from a seeded bootstrap of the mean.
NiResult non_inferiority(const std::vector<double>& deltas, double margin, double alpha = 0.05,
                         const BootstrapConfig& cfg = {});

struct EffectTable {
    double delta_iv;   // mean iv_score difference (calibrated - baseline)
    double delta_ov;   // mean ov_score difference (positive = improvement)
    double delta_dff;  // mean dff difference (negative = improvement)
    int n;
    std::vector<double> ov_deltas;  // per-pair, for the NI test
};

// Pairs records by pair_id; unmatched ids raise ValidationError.
EffectTable effect_table(const std::vector<FidelityRecord>& baseline,
                         const std::vector<FidelityRecord>& calibrated);

// Average ranks (ties averaged); exposed for reuse and testing.
std::vector<double> average_ranks(const std::vector<double>& xs);

}  // namespace mfid
