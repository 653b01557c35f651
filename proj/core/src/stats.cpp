#include "mfid/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mfid/rng.hpp"

namespace mfid {

std::vector<double> average_ranks(const std::vector<double>& xs) {
    const size_t n = xs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;  // degenerate: no variation
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman_point(const std::vector<double>& xs, const std::vector<double>& ys) {
    return pearson(average_ranks(xs), average_ranks(ys));
}

}  // namespace

CorrelationResult spearman(const std::vector<double>& xs, const std::vector<double>& ys,
                           const BootstrapConfig& cfg) {
    if (xs.size() != ys.size()) throw ValidationError("spearman: length mismatch");
    if (xs.size() < 5) throw ValidationError("spearman: need at least 5 samples");
    const size_t n = xs.size();
    CorrelationResult res;
    res.n = static_cast<int>(n);
    res.rho = spearman_point(xs, ys);

    Rng rng(cfg.seed);
    std::vector<double> rhos(static_cast<size_t>(cfg.resamples));
    std::vector<double> bx(n), by(n);
    for (int r = 0; r < cfg.resamples; ++r) {
        for (size_t i = 0; i < n; ++i) {
            const auto j = static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(n) - 1));
            bx[i] = xs[j];
            by[i] = ys[j];
        }
        rhos[static_cast<size_t>(r)] = spearman_point(bx, by);
    }
    res.ci_low = percentile_type7(rhos, 2.5);
    res.ci_high = percentile_type7(rhos, 97.5);
    // Percentile intervals from finite resamples may sit on one side of the
    // point estimate; widen to always bracket it.
    res.ci_low = std::min(res.ci_low, res.rho);
    res.ci_high = std::max(res.ci_high, res.rho);
    return res;
}

NiResult non_inferiority(const std::vector<double>& deltas, double margin, double alpha,
                         const BootstrapConfig& cfg) {
    if (deltas.size() < 10) throw ValidationError("non_inferiority: need at least 10 deltas");
    const size_t n = deltas.size();
    double mean = 0.0;
    for (double d : deltas) mean += d;
    mean /= static_cast<double>(n);

    Rng rng(cfg.seed);
    std::vector<double> means(static_cast<size_t>(cfg.resamples));
    for (int r = 0; r < cfg.resamples; ++r) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i)
            acc += deltas[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(n) - 1))];
        means[static_cast<size_t>(r)] = acc / static_cast<double>(n);
    }
    const double lo = percentile_type7(means, alpha * 100.0);
    return NiResult{mean, lo, margin, lo > margin};
}

EffectTable effect_table(const std::vector<FidelityRecord>& baseline,
                         const std::vector<FidelityRecord>& calibrated) {
    if (baseline.size() != calibrated.size())
        throw ValidationError("effect_table: record counts differ");
    std::unordered_map<std::string, const FidelityRecord*> by_id;
    by_id.reserve(baseline.size());
    for (const auto& r : baseline) by_id[r.pair_id] = &r;

    EffectTable t{0.0, 0.0, 0.0, static_cast<int>(calibrated.size()), {}};
    t.ov_deltas.reserve(calibrated.size());
    for (const auto& c : calibrated) {
        const auto it = by_id.find(c.pair_id);
        if (it == by_id.end())
            throw ValidationError("effect_table: unmatched pair id " + c.pair_id);
        const auto& b = *it->second;
        t.delta_iv += c.iv_score - b.iv_score;
        t.delta_ov += c.ov_score - b.ov_score;
        t.delta_dff += c.dff - b.dff;
        t.ov_deltas.push_back(c.ov_score - b.ov_score);
    }
    const double inv = 1.0 / static_cast<double>(t.n);
    t.delta_iv *= inv;
    t.delta_ov *= inv;
    t.delta_dff *= inv;
    return t;
}

}  // namespace mfid
