#include "mfid/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mfid {

void Thresholds::validate() const {
    if (!(eps_in > 0.0)) throw ValidationError("eps_in must be > 0");
    if (!(ov_score_cutoff > 0.0)) throw ValidationError("ov cutoff must be > 0");
    if (!(eps_dff > 0.0)) throw ValidationError("eps_dff must be > 0");
    if (eps_lf && !(*eps_lf > 0.0)) throw ValidationError("eps_lf must be > 0");
}

double FidelityRecord::lf_max() const {
    double m = 0.0;
    for (const auto& [layer, d] : lf_distances) m = std::max(m, d);
    return m;
}

IvCheckResult iv_check(const Image& x_s, const std::vector<Image>& rw, double eps_in) {
    if (rw.empty()) throw ValidationError("iv_check: empty real-world candidate set");
    double best = 0.0;
    size_t best_i = 0;
    for (size_t i = 0; i < rw.size(); ++i) {
        const double d = perceptual_distance(x_s, rw[i]);
        if (i == 0 || d < best) {
            best = d;
            best_i = i;
        }
    }
    return IvCheckResult{best, best_i, best <= eps_in};
}

OvResult ov_distance_and_score(SutKind kind, const SutOutput& out_s, const SutOutput& out_r) {
    if (out_s.kind != out_r.kind || out_s.kind != kind)
        throw ValidationError("ov_distance_and_score: SUT kind mismatch");
    if (kind == SutKind::steering) {
        const double d = static_cast<double>(out_s.values[0]) - out_r.values[0];
        return OvResult{d * d, std::exp(-5.0 * std::abs(d))};
    }
    if (out_s.values.size() != out_r.values.size())
        throw ValidationError("ov_distance_and_score: output size mismatch");
    size_t inter = 0, uni = 0;
    for (size_t i = 0; i < out_s.values.size(); ++i) {
        const bool a = out_s.values[i] > 0.f;
        const bool b = out_r.values[i] > 0.f;
        inter += (a && b) ? 1 : 0;
        uni += (a || b) ? 1 : 0;
    }
    const double iou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    return OvResult{1.0 - iou, iou};
}

LfCheckResult lf_check(const LayerActivations& acts_s, const LayerActivations& acts_r,
                       double eps_lf) {
    if (acts_s.size() != acts_r.size())
        throw ValidationError("lf_check: tap sets differ");
    LfCheckResult res;
    res.pass = true;
    for (const auto& [layer, ts] : acts_s) {
        const auto it = acts_r.find(layer);
        if (it == acts_r.end()) throw ValidationError("lf_check: tap sets differ");
        const auto& tr = it->second;
        if (ts.c != tr.c || ts.h != tr.h || ts.w != tr.w)
            throw ValidationError("lf_check: activation shapes differ");
        const double d = mse(std::span<const float>(ts.data), std::span<const float>(tr.data));
        res.distances[layer] = d;
        if (d > eps_lf) res.pass = false;
    }
    return res;
}

double percentile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("percentile of empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - std::floor(h);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::pair<double, double> calibrate_thresholds(std::vector<double> distances) {
    if (distances.size() < 20)
        throw ValidationError("calibrate_thresholds: need at least 20 samples");
    const double e90 = percentile_type7(distances, 90.0);
    const double e95 = percentile_type7(distances, 95.0);
    return {e90, e95};
}

double pass_rate(const std::vector<FidelityRecord>& records, double eps_dff) {
    if (records.empty()) throw ValidationError("pass_rate: empty record set");
    size_t n = 0;
    for (const auto& r : records)
        if (r.dff <= eps_dff) ++n;
    return static_cast<double>(n) / static_cast<double>(records.size());
}

AcceptabilityBreakdown acceptability(const FidelityRecord& rec, const Thresholds& th) {
    th.validate();
    AcceptabilityBreakdown b;
    b.pass_iv = rec.iv_distance <= th.eps_in;
    b.pass_ov = rec.ov_score >= th.ov_score_cutoff;
    b.pass_dff = rec.dff <= th.eps_dff;
    b.pass_all = b.pass_iv && b.pass_ov && b.pass_dff;
    if (th.eps_lf) b.pass_lf = rec.lf_max() <= *th.eps_lf;
    return b;
}

void apply_thresholds(FidelityRecord& rec, const Thresholds& th) {
    const auto b = acceptability(rec, th);
    rec.pass_iv = b.pass_iv;
    rec.pass_ov = b.pass_ov;
    rec.pass_dff = b.pass_dff;
    rec.pass_all = b.pass_all;
}

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void write_records_csv(const std::vector<FidelityRecord>& records,
                       const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "pair_id,iv_distance,iv_score,ov_loss,ov_score,dff,lf_max,"
           "pass_iv,pass_ov,pass_dff,pass_all\n";
    for (const auto& r : records) {
        out << r.pair_id << ',' << fmt_g(r.iv_distance) << ',' << fmt_g(r.iv_score) << ','
            << fmt_g(r.ov_loss) << ',' << fmt_g(r.ov_score) << ',' << fmt_g(r.dff) << ','
            << fmt_g(r.lf_max()) << ',' << (r.pass_iv ? 1 : 0) << ',' << (r.pass_ov ? 1 : 0)
            << ',' << (r.pass_dff ? 1 : 0) << ',' << (r.pass_all ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<FidelityRecord> read_records_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV: " + path.string());
    std::vector<FidelityRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        FidelityRecord r;
        auto next = [&]() {
            if (!std::getline(ss, tok, ',')) throw IoError("short CSV row: " + path.string());
            return tok;
        };
        r.pair_id = next();
        r.iv_distance = std::stod(next());
        r.iv_score = std::stod(next());
        r.ov_loss = std::stod(next());
        r.ov_score = std::stod(next());
        r.dff = std::stod(next());
        const double lf = std::stod(next());
        if (lf > 0.0) r.lf_distances[0] = lf;
        r.pass_iv = next() == "1";
        r.pass_ov = next() == "1";
        r.pass_dff = next() == "1";
        r.pass_all = next() == "1";
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace mfid
