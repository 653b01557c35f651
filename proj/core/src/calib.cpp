#include "mfid/calib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "mfid/binio.hpp"
#include "mfid/errors.hpp"
#include "mfid/fidelity.hpp"
#include "mfid/hashing.hpp"
#include "mfid/sut_math.hpp"

namespace mfid {

CalibrationConfig::CalibrationConfig() {
    cf_loss.k_cf = 8;
    cf_loss.steps = 30;
    cf_grad.k_cf = 2;
    cf_grad.steps = 12;
    cf_es.k_cf = 1;
    cf_es.steps = 10;
}

uint64_t CalibrationConfig::hash() const {
    char buf[320];
    const int n = std::snprintf(
        buf, sizeof(buf),
        "T=%d|b=%.9g|l=%.9g|de=%d|ep=%d|es=%.9g|ee=%d|lp=%.9g|lq=%.9g|h=%.9g|ck=%d",
        total_steps, beta, lambda_dff, dff_every, es_population, es_sigma, es_every,
        lr_primary, lr_post, fd_h, checkpoint_every);
    uint64_t h = fnv1a64(buf, static_cast<size_t>(n));
    h = mix64(h ^ cf_loss.hash());
    h = mix64(h ^ cf_grad.hash());
    h = mix64(h ^ cf_es.hash());
    char kb[160];
    const int m = std::snprintf(kb, sizeof(kb), "kt=%.9g,%.9g,%.9g,%.9g,%.9g",
                                static_cast<double>(knob_template.style_strength),
                                static_cast<double>(knob_template.contrast),
                                static_cast<double>(knob_template.brightness),
                                static_cast<double>(knob_template.blur_radius),
                                static_cast<double>(knob_template.texture_gain));
    return fnv1a64(kb, static_cast<size_t>(m), h);
}

uint64_t CalibratorParams::weights_hash() const {
    uint64_t h = fnv1a64("eta");
    h = fnv1a64(w1.data(), w1.size() * sizeof(float), h);
    h = fnv1a64(b1.data(), b1.size() * sizeof(float), h);
    h = fnv1a64(w2.data(), w2.size() * sizeof(float), h);
    h = fnv1a64(b2.data(), b2.size() * sizeof(float), h);
    h = fnv1a64(&gen_seed, sizeof(gen_seed), h);
    return h;
}

std::vector<float> image_feature_summary(const Image& img) {
    const Grid gray = to_gray(img);
    const auto ints = pool_means(gray, 4, 4);
    const auto grads = pool_means(gradient_magnitude(gray), 4, 4);
    std::vector<float> f;
    f.reserve(32);
    for (double v : ints) f.push_back(static_cast<float>(v));
    for (double v : grads) f.push_back(static_cast<float>(v * 4.0));
    return f;
}

namespace {

struct MlpCache {
    std::vector<float> input;   // 38
    std::vector<float> hidden;  // 32, post-relu
    std::vector<float> z;       // 5, pre-tanh
};

void calibrator_forward(const CalibratorParams& p, const std::vector<float>& input,
                        MlpCache& cache) {
    cache.input = input;
    cache.hidden.assign(CalibratorParams::kHiddenDim, 0.f);
    for (int o = 0; o < CalibratorParams::kHiddenDim; ++o) {
        float acc = p.b1[static_cast<size_t>(o)];
        const float* row = p.w1.data() + static_cast<size_t>(o) * CalibratorParams::kInputDim;
        for (int i = 0; i < CalibratorParams::kInputDim; ++i) acc += row[i] * input[static_cast<size_t>(i)];
        cache.hidden[static_cast<size_t>(o)] = acc > 0.f ? acc : 0.f;
    }
    cache.z.assign(CalibratorParams::kOutputDim, 0.f);
    for (int o = 0; o < CalibratorParams::kOutputDim; ++o) {
        float acc = p.b2[static_cast<size_t>(o)];
        const float* row = p.w2.data() + static_cast<size_t>(o) * CalibratorParams::kHiddenDim;
        for (int i = 0; i < CalibratorParams::kHiddenDim; ++i) acc += row[i] * cache.hidden[static_cast<size_t>(i)];
        cache.z[static_cast<size_t>(o)] = acc;
    }
}

GeneratorKnobs knobs_from_z(const std::vector<float>& z, uint64_t seed) {
    GeneratorKnobs k;
    k.seed = seed;
    for (int j = 0; j < kContinuousKnobs; ++j)
        set_knob_value(k, j,
                       kKnobBounds[j].mid() +
                           kKnobBounds[j].half() * std::tanh(z[static_cast<size_t>(j)]));
    return k;
}

// Applies eta -= sum_j dz[j] * grad_eta(z_j); dz already carries the
// per-knob learning rate and the tanh chain factor.
void calibrator_apply_grad(CalibratorParams& p, const MlpCache& cache,
                           const std::vector<float>& dz) {
    std::vector<float> dh(CalibratorParams::kHiddenDim, 0.f);
    for (int o = 0; o < CalibratorParams::kOutputDim; ++o) {
        const float g = dz[static_cast<size_t>(o)];
        if (g == 0.f) continue;
        float* row = p.w2.data() + static_cast<size_t>(o) * CalibratorParams::kHiddenDim;
        for (int i = 0; i < CalibratorParams::kHiddenDim; ++i) {
            dh[static_cast<size_t>(i)] += row[i] * g;
            row[i] -= g * cache.hidden[static_cast<size_t>(i)];
        }
        p.b2[static_cast<size_t>(o)] -= g;
    }
    for (int o = 0; o < CalibratorParams::kHiddenDim; ++o) {
        if (cache.hidden[static_cast<size_t>(o)] <= 0.f) continue;  // relu gate
        const float g = dh[static_cast<size_t>(o)];
        if (g == 0.f) continue;
        float* row = p.w1.data() + static_cast<size_t>(o) * CalibratorParams::kInputDim;
        for (int i = 0; i < CalibratorParams::kInputDim; ++i)
            row[i] -= g * cache.input[static_cast<size_t>(i)];
        p.b1[static_cast<size_t>(o)] -= g;
    }
}

std::vector<float> make_input(const std::vector<float>& features,
                              const ScenarioDescription& sd) {
    std::vector<float> input = features;
    const auto enc = sd.encode();
    input.insert(input.end(), enc.begin(), enc.end());
    if (input.size() != CalibratorParams::kInputDim)
        throw ValidationError("calibrator input dimension mismatch");
    return input;
}

uint64_t knob_hash(const GeneratorKnobs& k) {
    float vals[5];
    for (int j = 0; j < kContinuousKnobs; ++j) vals[j] = knob_value(k, j);
    uint64_t h = fnv1a64(vals, sizeof(vals));
    return fnv1a64(&k.seed, sizeof(k.seed), h);
}

}  // namespace

CalibratorParams init_calibrator(const CalibrationConfig& cfg, Rng& rng) {
    CalibratorParams p;
    p.w1.assign(static_cast<size_t>(CalibratorParams::kHiddenDim) * CalibratorParams::kInputDim, 0.f);
    p.b1.assign(CalibratorParams::kHiddenDim, 0.f);
    p.w2.assign(static_cast<size_t>(CalibratorParams::kOutputDim) * CalibratorParams::kHiddenDim, 0.f);
    p.b2.assign(CalibratorParams::kOutputDim, 0.f);
    Rng r = rng.split("eta", 0);
    for (auto& w : p.w1) w = static_cast<float>(r.next_normal() * 0.08);
    for (auto& w : p.w2) w = static_cast<float>(r.next_normal() * 0.08);
    // anchor the initial prediction at the dataset's initial knobs
    GeneratorKnobs t = cfg.knob_template;
    t.clamp();
    for (int j = 0; j < kContinuousKnobs; ++j) {
        const float u = std::clamp(
            (knob_value(t, j) - kKnobBounds[j].mid()) / kKnobBounds[j].half(), -0.95f, 0.95f);
        p.b2[static_cast<size_t>(j)] = std::atanh(u);
    }
    p.gen_seed = r.next_u64();
    return p;
}

GeneratorKnobs predict_knobs(const CalibratorParams& params, const Image& x_s_init,
                             const ScenarioDescription& sd) {
    MlpCache cache;
    calibrator_forward(params, make_input(image_feature_summary(x_s_init), sd), cache);
    return knobs_from_z(cache.z, params.gen_seed);
}

CombinedLoss combined_loss(const Image& x_s, const Image& x_r, const ReferenceSut& sut,
                           const CalibrationConfig& cfg, bool compute_dff, double held_dff,
                           const DffCache* cache, int jobs) {
    if (!x_s.same_shape(x_r)) throw DimensionError("combined_loss: image shape mismatch");
    CombinedLoss L{};
    L.recon = mse(x_s, x_r);
    const SutOutput out_s = forward(sut, x_s);
    const SutOutput out_r = forward(sut, x_r);
    L.ov = ov_distance_and_score(sut.kind, out_s, out_r).loss;
    double dff_term = held_dff;
    if (compute_dff) {
        const DecisiveMap map_r = decisive_map(sut, x_r, cfg.cf_loss, cache, jobs);
        const DecisiveMap map_s = decisive_map(sut, x_s, cfg.cf_loss, cache, jobs);
        dff_term = dff_distance(map_r, map_s);
        L.dff = dff_term;
    }
    L.total = L.recon + cfg.beta * L.ov + cfg.lambda_dff * dff_term;
    return L;
}

uint64_t es_step(const ScenarioDescription& sd, const GeneratorKnobs& knobs,
                 const FitnessFn& fitness, Rng& rng, int population, double sigma) {
    sd.validate();
    double best = fitness(knobs);
    uint64_t best_seed = knobs.seed;
    for (int i = 1; i < population; ++i) {
        GeneratorKnobs cand = knobs;
        cand.seed = rng.next_u64();
        for (int j = 0; j < kContinuousKnobs; ++j)
            set_knob_value(cand, j,
                           knob_value(cand, j) +
                               static_cast<float>(sigma * kKnobBounds[j].half() *
                                                  rng.next_normal()));
        cand.clamp();
        const double f = fitness(cand);
        if (f < best) {
            best = f;
            best_seed = cand.seed;
        }
    }
    return best_seed;
}

GeneratorKnobs sgd_step(const GeneratorKnobs& knobs, const std::array<double, 5>& grad,
                        const CalibrationConfig& cfg) {
    GeneratorKnobs out = knobs;
    for (int j = 0; j < kContinuousKnobs; ++j) {
        if (!std::isfinite(grad[static_cast<size_t>(j)]))
            throw NumericError("sgd_step: non-finite knob gradient");
        const double lr = j == 0 ? cfg.lr_primary : cfg.lr_post;
        set_knob_value(out, j,
                       knob_value(out, j) - static_cast<float>(lr * grad[static_cast<size_t>(j)]));
    }
    out.clamp();
    return out;
}

// Training --------------------------------------------------------------------

namespace {

struct PairState {
    std::vector<float> input;       // calibrator input vector
    SutOutput out_r;                // cached SUT output on x_r
    std::optional<DecisiveMap> map_r_loss;  // x_r decisive map, loss profile
    std::optional<DecisiveMap> map_r_grad;  // x_r decisive map, gradient profile
};

double probe_loss(const Image& x_s, const Image& x_r, const SutOutput& out_r,
                  const ReferenceSut& sut, const CalibrationConfig& cfg,
                  detail::SutRunnerT<float>& runner) {
    const double recon = mse(x_s, x_r);
    const auto out = runner.forward(x_s.data);
    SutOutput out_s{sut.kind, std::vector<float>(out.begin(), out.end())};
    const double ov = ov_distance_and_score(sut.kind, out_s, out_r).loss;
    return recon + cfg.beta * ov;
}

}  // namespace

TrainResult train_calibrator(const std::vector<PairedSample>& dataset, const ReferenceSut& sut,
                             const CalibrationConfig& cfg, const Rng& rng,
                             const TrainOptions& opts) {
    if (dataset.empty()) throw ValidationError("train_calibrator: empty dataset");
    const uint32_t checksum_before = sut.weight_checksum();
    const uint64_t cfg_hash = cfg.hash();
    const int n = static_cast<int>(dataset.size());

    Rng train_rng = rng.split("train", 0);
    CalibratorParams params;
    double held_dff = 0.0;
    int start_step = 1;

    if (!opts.checkpoint_path.empty() && std::filesystem::exists(opts.checkpoint_path)) {
        Checkpoint ck = load_checkpoint(opts.checkpoint_path);
        if (ck.config_hash != cfg_hash)
            throw ConfigError("checkpoint config hash does not match current config");
        params = ck.params;
        held_dff = ck.held_dff;
        start_step = ck.step + 1;
        train_rng = Rng::restore(ck.rng_key, ck.rng_counter);
    } else {
        Rng init_rng = train_rng.split("init", 0);
        params = init_calibrator(cfg, init_rng);
    }

    std::vector<PairState> state(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        state[static_cast<size_t>(i)].input =
            make_input(image_feature_summary(dataset[static_cast<size_t>(i)].x_s_init),
                       dataset[static_cast<size_t>(i)].sd);
        state[static_cast<size_t>(i)].out_r = forward(sut, dataset[static_cast<size_t>(i)].x_r);
    }

    detail::SutRunnerT<float> runner(sut);
    TrainResult result;
    const int stop_at = opts.stop_after > 0 ? std::min(opts.stop_after, cfg.total_steps)
                                            : cfg.total_steps;

    for (int t = start_step; t <= stop_at; ++t) {
        const auto idx =
            static_cast<size_t>(train_rng.next_int(0, static_cast<int64_t>(n) - 1));
        const PairedSample& pair = dataset[idx];
        PairState& ps = state[idx];

        MlpCache cache;
        calibrator_forward(params, ps.input, cache);
        GeneratorKnobs knobs = knobs_from_z(cache.z, params.gen_seed);
        const Image x_s = render_synthetic(pair.sd, knobs);

        const bool compute_dff = (t % cfg.dff_every == 0);
        const double recon = mse(x_s, pair.x_r);
        {
            const auto out = runner.forward(x_s.data);
            SutOutput out_s{sut.kind, std::vector<float>(out.begin(), out.end())};
            const double ov = ov_distance_and_score(sut.kind, out_s, ps.out_r).loss;
            if (compute_dff && cfg.lambda_dff != 0.0) {
                if (!ps.map_r_loss)
                    ps.map_r_loss = decisive_map(sut, pair.x_r, cfg.cf_loss, opts.map_cache,
                                                 opts.jobs);
                const DecisiveMap map_s =
                    decisive_map(sut, x_s, cfg.cf_loss, nullptr, opts.jobs);
                held_dff = dff_distance(*ps.map_r_loss, map_s);
            }
            const double total = recon + cfg.beta * ov + cfg.lambda_dff * held_dff;
            result.log.push_back(TrainLogEntry{t, recon, ov, held_dff, total,
                                               compute_dff && cfg.lambda_dff != 0.0,
                                               knob_hash(knobs)});
        }

        // knob gradients: central finite differences through the generator
        // path; the DFF term joins on refresh steps under the cheap profile
        const bool fd_dff = compute_dff && cfg.lambda_dff != 0.0;
        if (fd_dff && !ps.map_r_grad)
            ps.map_r_grad = decisive_map(sut, pair.x_r, cfg.cf_grad, opts.map_cache, opts.jobs);
        std::vector<float> dz(CalibratorParams::kOutputDim, 0.f);
        for (int j = 0; j < kContinuousKnobs; ++j) {
            GeneratorKnobs kp = knobs, km = knobs;
            set_knob_value(kp, j, knob_value(knobs, j) + static_cast<float>(cfg.fd_h));
            set_knob_value(km, j, knob_value(knobs, j) - static_cast<float>(cfg.fd_h));
            kp.clamp();
            km.clamp();
            const Image xp = render_synthetic(pair.sd, kp);
            const Image xm = render_synthetic(pair.sd, km);
            double lp = probe_loss(xp, pair.x_r, ps.out_r, sut, cfg, runner);
            double lm = probe_loss(xm, pair.x_r, ps.out_r, sut, cfg, runner);
            if (fd_dff) {
                const DecisiveMap mp = decisive_map(sut, xp, cfg.cf_grad, nullptr, opts.jobs);
                const DecisiveMap mm = decisive_map(sut, xm, cfg.cf_grad, nullptr, opts.jobs);
                lp += cfg.lambda_dff * dff_distance(*ps.map_r_grad, mp);
                lm += cfg.lambda_dff * dff_distance(*ps.map_r_grad, mm);
            }
            const double span = static_cast<double>(knob_value(kp, j)) - knob_value(km, j);
            const double g = span != 0.0 ? (lp - lm) / span : 0.0;
            if (!std::isfinite(g)) throw NumericError("train_calibrator: non-finite gradient");
            const double lr = j == 0 ? cfg.lr_primary : cfg.lr_post;
            const double th = std::tanh(static_cast<double>(cache.z[static_cast<size_t>(j)]));
            dz[static_cast<size_t>(j)] = static_cast<float>(
                lr * g * kKnobBounds[j].half() * (1.0 - th * th));
        }
        calibrator_apply_grad(params, cache, dz);

        if (cfg.es_every > 0 && t % cfg.es_every == 0) {
            // fitness on the current pair at the currently predicted knobs
            const FitnessFn fitness = [&](const GeneratorKnobs& cand) {
                const Image xs = render_synthetic(pair.sd, cand);
                double f = probe_loss(xs, pair.x_r, ps.out_r, sut, cfg, runner);
                if (cfg.lambda_dff != 0.0) {
                    if (!ps.map_r_loss)
                        ps.map_r_loss = decisive_map(sut, pair.x_r, cfg.cf_loss, opts.map_cache,
                                                     opts.jobs);
                    const DecisiveMap ms = decisive_map(sut, xs, cfg.cf_es, nullptr, opts.jobs);
                    // profiles differ on purpose; compare pooled maps directly
                    f += cfg.lambda_dff * mse(ps.map_r_loss->pooled, ms.pooled);
                }
                return f;
            };
            params.gen_seed =
                es_step(pair.sd, knobs, fitness, train_rng, cfg.es_population, cfg.es_sigma);
        }

        const bool at_end = (t == stop_at);
        if (!opts.checkpoint_path.empty() &&
            (at_end || (cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0))) {
            Checkpoint ck{cfg_hash, t, params, held_dff, train_rng.key(), train_rng.counter()};
            save_checkpoint(ck, opts.checkpoint_path);
        }
        if (opts.progress && (t % 100 == 0 || at_end))
            (*opts.progress) << "step " << t << "/" << stop_at << " total="
                             << result.log.back().l_total << "\n";
        result.last_step = t;
    }

    if (sut.weight_checksum() != checksum_before)
        throw ContractViolation("SUT weights changed during calibrator training");
    result.params = params;
    return result;
}

CalibratedSample apply_calibrator(const CalibratorParams& params, const PairedSample& sample) {
    CalibratedSample out;
    out.knobs = predict_knobs(params, sample.x_s_init, sample.sd);
    out.x_s = render_synthetic(sample.sd, out.knobs);
    return out;
}

// Checkpoint I/O ---------------------------------------------------------------

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    BinWriter w;
    w.magic("MFCK");
    w.u64(ck.config_hash);
    w.u32(static_cast<uint32_t>(ck.step));
    auto arr = [&w](const std::vector<float>& v) {
        w.u64(v.size());
        w.f32_array(v.data(), v.size());
    };
    arr(ck.params.w1);
    arr(ck.params.b1);
    arr(ck.params.w2);
    arr(ck.params.b2);
    w.u64(ck.params.gen_seed);
    uint64_t held_bits;
    std::memcpy(&held_bits, &ck.held_dff, 8);
    w.u64(held_bits);
    w.u64(ck.rng_key);
    w.u64(ck.rng_counter);
    w.crc32_trailer();
    w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    BinReader r = BinReader::load(path);
    r.expect_magic("MFCK");
    Checkpoint ck;
    ck.config_hash = r.u64();
    ck.step = static_cast<int>(r.u32());
    auto arr = [&r](std::vector<float>& v) {
        v.resize(r.u64());
        r.f32_array(v.data(), v.size());
    };
    arr(ck.params.w1);
    arr(ck.params.b1);
    arr(ck.params.w2);
    arr(ck.params.b2);
    ck.params.gen_seed = r.u64();
    const uint64_t held_bits = r.u64();
    std::memcpy(&ck.held_dff, &held_bits, 8);
    ck.rng_key = r.u64();
    ck.rng_counter = r.u64();
    r.check_crc32_trailer();
    return ck;
}

void write_train_log_csv(const std::vector<TrainLogEntry>& log,
                         const std::filesystem::path& path, bool append) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const bool fresh = !append || !std::filesystem::exists(path);
    std::ofstream out(path, fresh ? std::ios::trunc : std::ios::app);
    if (!out) throw IoError("cannot write " + path.string());
    if (fresh) out << "step,l_recon,l_ov,l_dff,l_total\n";
    char buf[200];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", e.step, e.l_recon, e.l_ov,
                      e.l_dff, e.l_total);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace mfid
