#include "mfid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mfid/calib.hpp"
#include "mfid/cf.hpp"
#include "mfid/dataset.hpp"
#include "mfid/fidelity.hpp"
#include "mfid/hashing.hpp"
#include "mfid/image_io.hpp"
#include "mfid/parallel.hpp"
#include "mfid/stats.hpp"
#include "mfid/version.hpp"

namespace mfid {

using ordered_json = nlohmann::ordered_json;

std::filesystem::path resolve_cache_dir(const std::filesystem::path& out_dir) {
    if (const char* env = std::getenv("MFID_CACHE_DIR"); env && *env)
        return std::filesystem::path(env);
    return out_dir / "cache";
}

std::filesystem::path sut_weights_path(const std::filesystem::path& cache_dir, SutTask task) {
    return cache_dir / (std::string("sut_") + sut_task_name(task) + ".mfwt");
}

double ni_margin_for(const RunConfig& cfg, SutTask task) {
    return task == SutTask::steer ? cfg.ni_margin_steering : cfg.ni_margin_segmentation;
}

namespace {

std::string pair_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "pair%04d", i);
    return buf;
}

ReferenceSut obtain_sut(const PipelineOptions& opts) {
    const auto path = sut_weights_path(opts.cache_dir, opts.sut_task);
    if (opts.log && !std::filesystem::exists(path))
        (*opts.log) << "training reference SUT '" << sut_task_name(opts.sut_task)
                    << "' (one-time, cached at " << path.string() << ")\n";
    return load_or_train_sut(opts.sut_task, path, opts.sut_recipe);
}

struct PairInputs {
    DatasetRecord rec;
    PairedSample pair;
    int index;
};

FidelityRecord evaluate_pair(const PairInputs& in, const ReferenceSut& sut,
                             const RunConfig& cfg, uint64_t dataset_seed,
                             const DffCache* cache) {
    FidelityRecord r;
    r.pair_id = in.rec.id;
    r.split = in.rec.split;

    std::vector<Image> rw;
    rw.push_back(in.pair.x_r);
    if (cfg.rw_candidates > 1) {
        Rng root(dataset_seed);
        const Rng pair_rng = root.split("pair", static_cast<uint64_t>(in.index));
        for (int k = 1; k < cfg.rw_candidates; ++k)
            rw.push_back(render_real_candidate(in.pair.sd, pair_rng, k));
    }
    const auto iv = iv_check(in.pair.x_s_init, rw, cfg.thresholds.eps_in);
    r.iv_distance = iv.min_distance;
    r.iv_score = 1.0 - std::clamp(iv.min_distance, 0.0, 1.0);

    const auto [out_s, acts_s] = forward_with_taps(sut, in.pair.x_s_init);
    const auto [out_r, acts_r] = forward_with_taps(sut, in.pair.x_r);
    const auto ov = ov_distance_and_score(sut.kind, out_s, out_r);
    r.ov_loss = ov.loss;
    r.ov_score = ov.score;

    const double eps_lf = cfg.thresholds.eps_lf.value_or(1e30);
    r.lf_distances = lf_check(acts_s, acts_r, eps_lf).distances;

    const DecisiveMap map_r = decisive_map(sut, in.pair.x_r, cfg.cf, cache);
    const DecisiveMap map_s = decisive_map(sut, in.pair.x_s_init, cfg.cf, cache);
    r.dff = dff_distance(map_r, map_s);
    return r;
}

struct ThresholdPlan {
    Thresholds th;
    std::optional<double> eps90, eps95;
};

ThresholdPlan plan_thresholds(const PipelineOptions& opts,
                              const std::vector<FidelityRecord>& records) {
    ThresholdPlan plan;
    plan.th = opts.config.thresholds;
    const std::string& mode = opts.thresholds_mode;
    if (mode == "user" || mode.empty()) return plan;
    if (mode.rfind("percentile:", 0) != 0)
        throw ConfigError("thresholds mode must be user|percentile:p1,p2");
    const std::string body = mode.substr(std::string("percentile:").size());
    const auto comma = body.find(',');
    if (comma == std::string::npos)
        throw ConfigError("percentile mode needs two percentiles, e.g. percentile:90,95");
    double p1 = 0, p2 = 0;
    try {
        p1 = std::stod(body.substr(0, comma));
        p2 = std::stod(body.substr(comma + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad percentile values in --thresholds");
    }
    if (p1 > p2) std::swap(p1, p2);
    std::vector<double> cal;
    for (const auto& r : records)
        if (r.split == "calibration") cal.push_back(r.dff);
    if (cal.size() < 20)
        throw ValidationError("percentile thresholds need >= 20 calibration pairs");
    plan.eps90 = percentile_type7(cal, p1);
    plan.eps95 = percentile_type7(cal, p2);
    plan.th.eps_dff = *plan.eps95;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "percentile(%.9g,%.9g,split=calibration)", p1, p2);
    plan.th.provenance = buf;
    return plan;
}

double split_pass_rate(const std::vector<FidelityRecord>& records, const std::string& split,
                       double eps) {
    std::vector<FidelityRecord> subset;
    for (const auto& r : records)
        if (r.split == split) subset.push_back(r);
    if (subset.empty()) return -1.0;
    return pass_rate(subset, eps);
}

ordered_json spearman_json(const std::vector<FidelityRecord>& records,
                           const BootstrapConfig& bs) {
    std::vector<double> iv, ovs, dff;
    for (const auto& r : records)
        if (r.split == "heldout") {
            iv.push_back(r.iv_score);
            ovs.push_back(r.ov_score);
            dff.push_back(r.dff);
        }
    ordered_json j;
    j["split"] = "heldout";
    j["n"] = iv.size();
    if (iv.size() >= 5) {
        auto put = [&](const char* key, const CorrelationResult& c) {
            ordered_json e;
            e["rho"] = c.rho;
            e["ci_low"] = c.ci_low;
            e["ci_high"] = c.ci_high;
            e["n"] = c.n;
            j[key] = std::move(e);
        };
        put("iv_ov", spearman(iv, ovs, bs));
        put("ov_dff", spearman(ovs, dff, bs));
        put("iv_dff", spearman(iv, dff, bs));
    }
    return j;
}

void write_json(const ordered_json& j, const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

ordered_json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("JSON parse error in " + path.string() + ": " + e.what());
    }
    return j;
}

}  // namespace

// generate --------------------------------------------------------------------

std::filesystem::path cmd_generate(const PipelineOptions& opts) {
    const RunConfig& cfg = opts.config;
    std::filesystem::create_directories(opts.out_dir / "imgs");

    Rng root(cfg.seed);
    Rng grid_rng = root.split("scenarios", 0);
    const auto sds = sample_scenario_grid(cfg.n_pairs, grid_rng, cfg.sample_opts);
    const auto [n_cal, n_held] = split_sizes(cfg.n_pairs, cfg.split_ratio);
    (void)n_held;

    Manifest manifest;
    manifest.version = kVersion;
    manifest.config_hash = cfg.config_hash();
    manifest.seed = cfg.seed;
    manifest.records.resize(static_cast<size_t>(cfg.n_pairs));

    parallel_for(static_cast<size_t>(cfg.n_pairs), opts.jobs, [&](size_t i) {
        const Rng pair_rng = root.split("pair", i);
        const std::string id = pair_name(static_cast<int>(i));
        PairedSample p = make_paired_sample(id, sds[i], pair_rng, cfg.init_knobs);
        DatasetRecord rec;
        rec.id = id;
        rec.sd = sds[i];
        rec.real_path = "imgs/" + id + "_r.mfid";
        rec.synth_path = "imgs/" + id + "_s.mfid";
        rec.knobs = p.knobs_init;
        rec.split = static_cast<int>(i) < n_cal ? "calibration" : "heldout";
        write_image_raw(p.x_r, opts.out_dir / rec.real_path);
        write_image_raw(p.x_s_init, opts.out_dir / rec.synth_path);
        write_image_png(p.x_r, opts.out_dir / ("imgs/" + id + "_r.png"));
        write_image_png(p.x_s_init, opts.out_dir / ("imgs/" + id + "_s.png"));
        manifest.records[i] = std::move(rec);
    });

    const auto manifest_path = opts.out_dir / "manifest.json";
    write_manifest(manifest, manifest_path);
    if (opts.log)
        (*opts.log) << "generated " << cfg.n_pairs << " pairs (" << n_cal << " calibration / "
                    << cfg.n_pairs - n_cal << " heldout) -> " << manifest_path.string() << "\n";
    return manifest_path;
}

// evaluate --------------------------------------------------------------------

std::filesystem::path cmd_evaluate(const PipelineOptions& opts,
                                   const std::filesystem::path& manifest_path) {
    const RunConfig& cfg = opts.config;
    const Manifest manifest = read_manifest(manifest_path);
    if (manifest.records.empty()) throw ValidationError("manifest has no records");
    const auto manifest_dir = manifest_path.parent_path();

    const ReferenceSut sut = obtain_sut(opts);
    DffCache cache(opts.cache_dir);

    std::vector<FidelityRecord> records(manifest.records.size());
    parallel_for(manifest.records.size(), opts.jobs, [&](size_t i) {
        PairInputs in{manifest.records[i], load_pair(manifest.records[i], manifest_dir),
                      static_cast<int>(i)};
        records[i] = evaluate_pair(in, sut, cfg, manifest.seed, &cache);
    });

    const ThresholdPlan plan = plan_thresholds(opts, records);
    for (auto& r : records) apply_thresholds(r, plan.th);

    write_records_csv(records, opts.out_dir / "pairs.csv");

    ordered_json agg;
    agg["version"] = kVersion;
    agg["kind"] = "evaluate";
    agg["config_hash"] = cfg.config_hash();
    agg["manifest_config_hash"] = manifest.config_hash;
    agg["sut"] = {{"task", sut_task_name(opts.sut_task)},
                  {"id", sut.id},
                  {"id_hash", hash_hex(sut.id_hash())},
                  {"weight_checksum", sut.weight_checksum()}};
    ordered_json th;
    th["eps_in"] = plan.th.eps_in;
    th["ov_score_cutoff"] = plan.th.ov_score_cutoff;
    th["eps_dff"] = plan.th.eps_dff;
    if (plan.th.eps_lf) th["eps_lf"] = *plan.th.eps_lf;
    th["provenance"] = plan.th.provenance;
    if (plan.eps90) th["eps90"] = *plan.eps90;
    if (plan.eps95) th["eps95"] = *plan.eps95;
    agg["thresholds"] = std::move(th);

    ordered_json rates;
    for (const char* split : {"calibration", "heldout"}) {
        ordered_json s;
        const double at_eps = split_pass_rate(records, split, plan.th.eps_dff);
        if (at_eps >= 0.0) {
            s["dff_at_eps_dff"] = at_eps;
            if (plan.eps90) s["dff_at_eps90"] = split_pass_rate(records, split, *plan.eps90);
            if (plan.eps95) s["dff_at_eps95"] = split_pass_rate(records, split, *plan.eps95);
            size_t n = 0, all = 0, niv = 0, nov = 0;
            for (const auto& r : records)
                if (r.split == split) {
                    ++n;
                    all += r.pass_all ? 1 : 0;
                    niv += r.pass_iv ? 1 : 0;
                    nov += r.pass_ov ? 1 : 0;
                }
            s["iv"] = static_cast<double>(niv) / static_cast<double>(n);
            s["ov"] = static_cast<double>(nov) / static_cast<double>(n);
            s["all"] = static_cast<double>(all) / static_cast<double>(n);
            s["n"] = n;
        }
        rates[split] = std::move(s);
    }
    agg["pass_rates"] = std::move(rates);
    agg["spearman"] = spearman_json(records, cfg.bootstrap);

    ordered_json dists;
    for (const char* split : {"calibration", "heldout"}) {
        std::vector<double> d;
        for (const auto& r : records)
            if (r.split == split) d.push_back(r.dff);
        std::sort(d.begin(), d.end());
        dists[split] = d;
    }
    agg["dff_distances"] = std::move(dists);

    const auto agg_path = opts.out_dir / "aggregate.json";
    write_json(agg, agg_path);
    if (opts.log)
        (*opts.log) << "evaluated " << records.size() << " pairs -> " << agg_path.string()
                    << "\n";
    return agg_path;
}

// calibrate -------------------------------------------------------------------

std::filesystem::path cmd_calibrate(const PipelineOptions& opts,
                                    const std::filesystem::path& manifest_path) {
    RunConfig cfg = opts.config;
    if (opts.variant == "ovf")
        cfg.calibration.lambda_dff = 0.0;
    else if (opts.variant != "dff")
        throw ConfigError("calibrate variant must be ovf|dff");

    const Manifest manifest = read_manifest(manifest_path);
    const auto manifest_dir = manifest_path.parent_path();
    std::vector<PairedSample> cal_pairs;
    std::vector<std::pair<DatasetRecord, PairedSample>> held;
    for (const auto& rec : manifest.records) {
        if (rec.split == "calibration")
            cal_pairs.push_back(load_pair(rec, manifest_dir));
        else
            held.emplace_back(rec, load_pair(rec, manifest_dir));
    }
    if (cal_pairs.empty()) throw ValidationError("calibration split is empty");

    const ReferenceSut sut = obtain_sut(opts);
    DffCache cache(opts.cache_dir);

    TrainOptions topts;
    topts.checkpoint_path = opts.out_dir / "checkpoint.mfck";
    topts.map_cache = &cache;
    topts.jobs = opts.jobs;
    topts.progress = opts.log;
    const Rng root(cfg.seed ^ 0xca11b8ull);
    const TrainResult trained = train_calibrator(cal_pairs, sut, cfg.calibration, root, topts);
    write_train_log_csv(trained.log, opts.out_dir / "train_log.csv", /*append=*/true);

    // held-out before/after evaluation
    std::vector<FidelityRecord> base_recs(held.size()), cal_recs(held.size());
    parallel_for(held.size(), opts.jobs, [&](size_t i) {
        const auto& [rec, pair] = held[i];
        auto eval_one = [&](const Image& x_s) {
            FidelityRecord r;
            r.pair_id = rec.id;
            r.split = rec.split;
            const double ivd = perceptual_distance(x_s, pair.x_r);
            r.iv_distance = ivd;
            r.iv_score = 1.0 - std::clamp(ivd, 0.0, 1.0);
            const SutOutput out_s = forward(sut, x_s);
            const SutOutput out_r = forward(sut, pair.x_r);
            const auto ov = ov_distance_and_score(sut.kind, out_s, out_r);
            r.ov_loss = ov.loss;
            r.ov_score = ov.score;
            const DecisiveMap map_r = decisive_map(sut, pair.x_r, cfg.cf, &cache);
            const DecisiveMap map_s = decisive_map(sut, x_s, cfg.cf, &cache);
            r.dff = dff_distance(map_r, map_s);
            return r;
        };
        base_recs[i] = eval_one(pair.x_s_init);
        cal_recs[i] = eval_one(apply_calibrator(trained.params, pair).x_s);
    });

    ordered_json summary;
    summary["version"] = kVersion;
    summary["kind"] = "calibrate";
    summary["config_hash"] = cfg.config_hash();
    summary["manifest_config_hash"] = manifest.config_hash;
    summary["variant"] = opts.variant;
    summary["lambda_dff_effective"] = cfg.calibration.lambda_dff;
    summary["sut"] = {{"task", sut_task_name(opts.sut_task)},
                      {"id", sut.id},
                      {"id_hash", hash_hex(sut.id_hash())}};
    summary["final_step"] = trained.last_step;
    summary["eta_hash"] = hash_hex(trained.params.weights_hash());
    summary["gen_seed"] = trained.params.gen_seed;

    if (!held.empty()) {
        const EffectTable t = effect_table(base_recs, cal_recs);
        summary["effect"] = {{"delta_iv", t.delta_iv},
                             {"delta_ov", t.delta_ov},
                             {"delta_dff", t.delta_dff},
                             {"n", t.n}};
        if (t.ov_deltas.size() >= 10) {
            const NiResult ni = non_inferiority(t.ov_deltas, ni_margin_for(cfg, opts.sut_task),
                                                0.05, cfg.bootstrap);
            summary["non_inferiority"] = {{"delta_mean", ni.delta_mean},
                                          {"ci_low_one_sided", ni.ci_low_one_sided},
                                          {"margin", ni.margin},
                                          {"pass", ni.pass}};
        }
        auto mean_dff = [](const std::vector<FidelityRecord>& rs, auto&& pred) {
            double acc = 0.0;
            int n = 0;
            for (const auto& r : rs)
                if (pred(r)) {
                    acc += r.dff;
                    ++n;
                }
            return n ? acc / n : -1.0;
        };
        auto always = [](const FidelityRecord&) { return true; };
        summary["heldout_mean_dff"] = {{"baseline", mean_dff(base_recs, always)},
                                       {"calibrated", mean_dff(cal_recs, always)}};
        std::vector<char> is_decoy;
        is_decoy.reserve(held.size());
        for (const auto& [rec, pair] : held) is_decoy.push_back(rec.sd.decoy_sign_present);
        auto decoy_mean = [&](const std::vector<FidelityRecord>& rs) {
            double acc = 0.0;
            int n = 0;
            for (size_t i = 0; i < rs.size(); ++i)
                if (is_decoy[i]) {
                    acc += rs[i].dff;
                    ++n;
                }
            return n ? acc / n : -1.0;
        };
        summary["decoy_mean_dff"] = {{"baseline", decoy_mean(base_recs)},
                                     {"calibrated", decoy_mean(cal_recs)}};

        ordered_json per_pair = ordered_json::array();
        for (size_t i = 0; i < held.size(); ++i) {
            per_pair.push_back({{"id", base_recs[i].pair_id},
                                {"iv_baseline", base_recs[i].iv_score},
                                {"iv_calibrated", cal_recs[i].iv_score},
                                {"ov_baseline", base_recs[i].ov_score},
                                {"ov_calibrated", cal_recs[i].ov_score},
                                {"dff_baseline", base_recs[i].dff},
                                {"dff_calibrated", cal_recs[i].dff},
                                {"decoy", static_cast<bool>(is_decoy[i])}});
        }
        summary["per_pair"] = std::move(per_pair);
    }

    const auto out = opts.out_dir / "calibrate_summary.json";
    write_json(summary, out);
    if (opts.log) (*opts.log) << "calibration (" << opts.variant << ") -> " << out.string() << "\n";
    return out;
}

// report ----------------------------------------------------------------------

std::filesystem::path cmd_report(const PipelineOptions& opts,
                                 const std::vector<std::filesystem::path>& inputs) {
    if (inputs.empty()) throw ValidationError("report needs at least one evaluation output");
    std::vector<ordered_json> docs;
    for (const auto& p : inputs) docs.push_back(read_json(p));

    const std::string hash0 = docs.front().at("config_hash").get<std::string>();
    for (size_t i = 1; i < docs.size(); ++i) {
        const std::string h = docs[i].at("config_hash").get<std::string>();
        if (h != hash0)
            throw ConfigError("config hash mismatch across report inputs: " + hash0 +
                              " vs " + h + " (" + inputs[i].string() + ")");
    }

    std::filesystem::create_directories(opts.out_dir);
    std::ostringstream rep;
    rep << "mfid report (version " << kVersion << ")\n";
    rep << "config_hash: " << hash0 << "\n\n";

    char buf[256];
    for (size_t d = 0; d < docs.size(); ++d) {
        const auto& j = docs[d];
        const std::string kind = j.value("kind", "evaluate");
        rep << "== input " << d << ": " << inputs[d].string() << " [" << kind << "]\n";
        if (kind == "evaluate") {
            const auto& th = j.at("thresholds");
            rep << "  sut: " << j.at("sut").at("task").get<std::string>() << "\n";
            std::snprintf(buf, sizeof(buf), "  thresholds: eps_in=%.6g ov_cutoff=%.6g eps_dff=%.6g (%s)\n",
                          th.at("eps_in").get<double>(), th.at("ov_score_cutoff").get<double>(),
                          th.at("eps_dff").get<double>(),
                          th.at("provenance").get<std::string>().c_str());
            rep << buf;
            if (th.contains("eps90")) {
                std::snprintf(buf, sizeof(buf), "  eps90=%.9g eps95=%.9g\n",
                              th.at("eps90").get<double>(), th.at("eps95").get<double>());
                rep << buf;
            }
            for (const char* split : {"calibration", "heldout"}) {
                const auto& r = j.at("pass_rates").at(split);
                if (!r.contains("n")) continue;
                std::snprintf(buf, sizeof(buf),
                              "  %-11s n=%-4llu pass(iv)=%.4g pass(ov)=%.4g pass(dff)=%.4g pass(all)=%.4g\n",
                              split, static_cast<unsigned long long>(r.at("n").get<size_t>()),
                              r.at("iv").get<double>(), r.at("ov").get<double>(),
                              r.at("dff_at_eps_dff").get<double>(), r.at("all").get<double>());
                rep << buf;
                if (r.contains("dff_at_eps90")) {
                    std::snprintf(buf, sizeof(buf), "  %-11s pass(dff@eps90)=%.4g pass(dff@eps95)=%.4g\n",
                                  split, r.at("dff_at_eps90").get<double>(),
                                  r.at("dff_at_eps95").get<double>());
                    rep << buf;
                }
            }
            const auto& sp = j.at("spearman");
            if (sp.contains("ov_dff")) {
                for (const char* key : {"iv_ov", "ov_dff", "iv_dff"}) {
                    const auto& c = sp.at(key);
                    std::snprintf(buf, sizeof(buf), "  spearman %-6s rho=%+.4f ci=[%+.4f, %+.4f] n=%d\n",
                                  key, c.at("rho").get<double>(), c.at("ci_low").get<double>(),
                                  c.at("ci_high").get<double>(), c.at("n").get<int>());
                    rep << buf;
                }
            }
            // CDF sample points per split
            const std::string sut_name = j.at("sut").at("task").get<std::string>();
            for (const char* split : {"calibration", "heldout"}) {
                const auto& arr = j.at("dff_distances").at(split);
                if (arr.empty()) continue;
                std::ostringstream name;
                name << "cdf_" << sut_name << "_" << split;
                if (docs.size() > 1) name << "_" << d;
                name << ".csv";
                std::ofstream cdf(opts.out_dir / name.str(), std::ios::trunc);
                if (!cdf) throw IoError("cannot write CDF CSV");
                cdf << "epsilon,fraction\n";
                const size_t n = arr.size();
                for (size_t i = 0; i < n; ++i) {
                    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", arr[i].get<double>(),
                                  static_cast<double>(i + 1) / static_cast<double>(n));
                    cdf << buf;
                }
                rep << "  cdf: " << name.str() << " (" << n << " points)\n";
            }
        } else if (kind == "calibrate") {
            rep << "  variant: " << j.at("variant").get<std::string>() << "\n";
            if (j.contains("effect")) {
                const auto& e = j.at("effect");
                std::snprintf(buf, sizeof(buf),
                              "  effect (calibrated - baseline): dIV=%+.6g dOV=%+.6g dDFF=%+.6g n=%d\n",
                              e.at("delta_iv").get<double>(), e.at("delta_ov").get<double>(),
                              e.at("delta_dff").get<double>(), e.at("n").get<int>());
                rep << buf;
            }
            if (j.contains("non_inferiority")) {
                const auto& ni = j.at("non_inferiority");
                std::snprintf(buf, sizeof(buf),
                              "  non-inferiority: mean=%+.6g lower95=%+.6g margin=%+.6g -> %s\n",
                              ni.at("delta_mean").get<double>(),
                              ni.at("ci_low_one_sided").get<double>(),
                              ni.at("margin").get<double>(),
                              ni.at("pass").get<bool>() ? "PASS" : "FAIL");
                rep << buf;
            }
        }
        rep << "\n";
    }

    const auto path = opts.out_dir / "report.txt";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << rep.str();
    if (opts.log) (*opts.log) << "report -> " << path.string() << "\n";
    return path;
}

}  // namespace mfid
