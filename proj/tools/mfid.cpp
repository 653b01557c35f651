// mfid: paired-domain fidelity evaluation and generator calibration.
//
// Subcommands: generate | evaluate | calibrate | report.
// Exit codes: 0 success, 1 config/usage error, 2 I/O error, 3 numeric failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfid/errors.hpp"
#include "mfid/pipeline.hpp"
#include "mfid/version.hpp"

namespace {

mfid::SutTask parse_sut(const std::string& s) {
    if (s == "steer") return mfid::SutTask::steer;
    if (s == "da") return mfid::SutTask::drivable;
    if (s == "ll") return mfid::SutTask::lane;
    throw mfid::ConfigError("--sut must be steer|da|ll");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mfid: decisive-feature fidelity toolkit"};
    app.set_version_flag("--version", std::string("mfid ") + mfid::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string sut_name = "steer";
    std::string variant = "dff";
    std::string thresholds_mode = "user";
    int jobs = 1;
    std::string seed_str;
    std::string manifest_path;
    std::vector<std::string> report_inputs;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "configuration file (key=value sections)");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--jobs", jobs, "worker threads (outputs are identical for any value)");
        cmd->add_option("--seed", seed_str, "override [scene] seed");
    };

    CLI::App* gen = app.add_subcommand("generate", "render the paired dataset + manifest");
    add_common(gen);

    CLI::App* eva = app.add_subcommand("evaluate", "per-pair IV/OV/LF/DFF records and reports");
    add_common(eva);
    eva->add_option("--manifest", manifest_path, "dataset manifest")->required();
    eva->add_option("--sut", sut_name, "system under test: steer|da|ll");
    eva->add_option("--thresholds", thresholds_mode, "user | percentile:p1,p2");

    CLI::App* cal = app.add_subcommand("calibrate", "train a calibration variant");
    add_common(cal);
    cal->add_option("--manifest", manifest_path, "dataset manifest")->required();
    cal->add_option("--sut", sut_name, "system under test: steer|da|ll");
    cal->add_option("--variant", variant, "ovf | dff");

    CLI::App* rep = app.add_subcommand("report", "summarize evaluation outputs");
    add_common(rep);
    rep->add_option("inputs", report_inputs, "aggregate/calibration JSON files")
        ->required()
        ->expected(-1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        mfid::PipelineOptions opts;
        opts.config = config_path.empty() ? mfid::RunConfig::defaults()
                                          : mfid::RunConfig::parse_file(config_path);
        if (!seed_str.empty()) {
            try {
                opts.config.seed = std::stoull(seed_str);
            } catch (const std::exception&) {
                throw mfid::ConfigError("--seed must be an unsigned integer");
            }
        }
        if (jobs < 0) throw mfid::ConfigError("--jobs must be >= 0");
        opts.out_dir = out_dir;
        opts.jobs = jobs;
        opts.sut_task = parse_sut(sut_name);
        opts.variant = variant;
        opts.thresholds_mode = thresholds_mode;
        opts.cache_dir = mfid::resolve_cache_dir(opts.out_dir);
        opts.log = &std::cerr;

        if (gen->parsed()) {
            mfid::cmd_generate(opts);
        } else if (eva->parsed()) {
            mfid::cmd_evaluate(opts, manifest_path);
        } else if (cal->parsed()) {
            mfid::cmd_calibrate(opts, manifest_path);
        } else if (rep->parsed()) {
            std::vector<std::filesystem::path> inputs(report_inputs.begin(),
                                                      report_inputs.end());
            mfid::cmd_report(opts, inputs);
        }
        return 0;
    } catch (const mfid::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const mfid::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const mfid::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 2;
    } catch (const mfid::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
