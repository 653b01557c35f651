#include "mfid/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfid/hashing.hpp"

namespace mfid {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
    }
}

int to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) throw ConfigError(key + " must be an integer");
    return i;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("bad unsigned value for " + key + ": '" + v + "'");
    }
}

// Derived pieces: the calibration CF profiles share every [cf] setting but
// run with their own seed counts / step budgets; the knob template anchors
// the calibrator's initial prediction.
void finalize(RunConfig& c, int cf_k, int cf_steps, int grad_k, int grad_steps, int es_k,
              int es_steps) {
    auto profile = [&](int k, int steps) {
        CfConfig p = c.cf;
        p.k_cf = k;
        p.steps = steps;
        return p;
    };
    c.calibration.cf_loss = profile(cf_k, cf_steps);
    c.calibration.cf_grad = profile(grad_k, grad_steps);
    c.calibration.cf_es = profile(es_k, es_steps);
    c.calibration.knob_template = c.init_knobs;
}

}  // namespace

RunConfig RunConfig::parse_text(const std::string& text) {
    RunConfig c;
    int cf_k = 8, cf_steps = 30, grad_k = 2, grad_steps = 12, es_k = 1, es_steps = 10;

    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find_first_of("#;");
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section");
            section = line.substr(1, line.size() - 2);
            if (section != "scene" && section != "cf" && section != "fidelity" &&
                section != "calibration" && section != "stats")
                throw ConfigError("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section");

        auto unknown = [&]() -> ConfigError {
            return ConfigError("unknown key '" + key + "' in section [" + section + "]");
        };

        if (section == "scene") {
            if (key == "n_pairs") c.n_pairs = to_int(key, val);
            else if (key == "seed") c.seed = to_u64(key, val);
            else if (key == "split_ratio") c.split_ratio = to_double(key, val);
            else if (key == "obstacle_probability") c.sample_opts.obstacle_probability = to_double(key, val);
            else if (key == "decoy_probability") c.sample_opts.decoy_probability = to_double(key, val);
            else if (key == "rw_candidates") c.rw_candidates = to_int(key, val);
            else if (key == "init_style_strength") c.init_knobs.style_strength = static_cast<float>(to_double(key, val));
            else if (key == "init_contrast") c.init_knobs.contrast = static_cast<float>(to_double(key, val));
            else if (key == "init_brightness") c.init_knobs.brightness = static_cast<float>(to_double(key, val));
            else if (key == "init_blur_radius") c.init_knobs.blur_radius = static_cast<float>(to_double(key, val));
            else if (key == "init_texture_gain") c.init_knobs.texture_gain = static_cast<float>(to_double(key, val));
            else throw unknown();
        } else if (section == "cf") {
            if (key == "k_cf") c.cf.k_cf = to_int(key, val);
            else if (key == "steps") c.cf.steps = to_int(key, val);
            else if (key == "mask_resolution") c.cf.mask_resolution = to_int(key, val);
            else if (key == "lambda_sparsity") c.cf.lambda_sparsity = static_cast<float>(to_double(key, val));
            else if (key == "lambda_tv") c.cf.lambda_tv = static_cast<float>(to_double(key, val));
            else if (key == "tau_flip_steering") c.cf.tau_flip_steering = static_cast<float>(to_double(key, val));
            else if (key == "tau_flip_segmentation") c.cf.tau_flip_segmentation = static_cast<float>(to_double(key, val));
            else if (key == "infill") {
                if (val == "blur") c.cf.infill = InfillKind::blur;
                else if (val == "mean") c.cf.infill = InfillKind::mean;
                else throw ConfigError("infill must be blur|mean");
            }
            else if (key == "infill_blur_radius") c.cf.infill_blur_radius = static_cast<float>(to_double(key, val));
            else if (key == "step_size") c.cf.step_size = static_cast<float>(to_double(key, val));
            else if (key == "base_seed") c.cf.base_seed = to_u64(key, val);
            else throw unknown();
        } else if (section == "fidelity") {
            if (key == "eps_in") c.thresholds.eps_in = to_double(key, val);
            else if (key == "ov_score_cutoff") c.thresholds.ov_score_cutoff = to_double(key, val);
            else if (key == "eps_dff") c.thresholds.eps_dff = to_double(key, val);
            else if (key == "eps_lf") c.thresholds.eps_lf = to_double(key, val);
            else throw unknown();
        } else if (section == "calibration") {
            if (key == "total_steps") c.calibration.total_steps = to_int(key, val);
            else if (key == "beta") c.calibration.beta = to_double(key, val);
            else if (key == "lambda_dff") c.calibration.lambda_dff = to_double(key, val);
            else if (key == "dff_every") c.calibration.dff_every = to_int(key, val);
            else if (key == "es_population") c.calibration.es_population = to_int(key, val);
            else if (key == "es_sigma") c.calibration.es_sigma = to_double(key, val);
            else if (key == "es_every") c.calibration.es_every = to_int(key, val);
            else if (key == "lr_primary") c.calibration.lr_primary = to_double(key, val);
            else if (key == "lr_post") c.calibration.lr_post = to_double(key, val);
            else if (key == "fd_h") c.calibration.fd_h = to_double(key, val);
            else if (key == "checkpoint_every") c.calibration.checkpoint_every = to_int(key, val);
            else if (key == "cf_k_cf") cf_k = to_int(key, val);
            else if (key == "cf_steps") cf_steps = to_int(key, val);
            else if (key == "grad_k_cf") grad_k = to_int(key, val);
            else if (key == "grad_steps") grad_steps = to_int(key, val);
            else if (key == "es_k_cf") es_k = to_int(key, val);
            else if (key == "es_steps") es_steps = to_int(key, val);
            else throw unknown();
        } else if (section == "stats") {
            if (key == "bootstrap_resamples") c.bootstrap.resamples = to_int(key, val);
            else if (key == "bootstrap_seed") c.bootstrap.seed = to_u64(key, val);
            else if (key == "ni_margin_steering") c.ni_margin_steering = to_double(key, val);
            else if (key == "ni_margin_segmentation") c.ni_margin_segmentation = to_double(key, val);
            else throw unknown();
        }
    }

    if (c.n_pairs < 1) throw ConfigError("n_pairs must be >= 1");
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0))
        throw ConfigError("split_ratio must be in (0, 1)");
    if (c.rw_candidates < 1) throw ConfigError("rw_candidates must be >= 1");
    if (c.cf.k_cf < 1 || c.cf.steps < 1) throw ConfigError("cf k_cf and steps must be >= 1");
    if (c.cf.lambda_sparsity < 0.f || c.cf.lambda_tv < 0.f)
        throw ConfigError("cf penalty weights must be >= 0");
    if (c.cf.mask_resolution < 2) throw ConfigError("mask_resolution must be >= 2");
    if (c.calibration.dff_every < 1) throw ConfigError("dff_every must be >= 1");
    if (c.calibration.total_steps < 1) throw ConfigError("total_steps must be >= 1");
    c.init_knobs.clamp();

    finalize(c, cf_k, cf_steps, grad_k, grad_steps, es_k, es_steps);
    return c;
}

RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    char buf[64];
    auto g = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        return std::string(buf);
    };
    os << "scene.n_pairs=" << n_pairs << '\n'
       << "scene.seed=" << seed << '\n'
       << "scene.split_ratio=" << g(split_ratio) << '\n'
       << "scene.obstacle_probability=" << g(sample_opts.obstacle_probability) << '\n'
       << "scene.decoy_probability=" << g(sample_opts.decoy_probability) << '\n'
       << "scene.rw_candidates=" << rw_candidates << '\n'
       << "scene.init_style_strength=" << g(init_knobs.style_strength) << '\n'
       << "scene.init_contrast=" << g(init_knobs.contrast) << '\n'
       << "scene.init_brightness=" << g(init_knobs.brightness) << '\n'
       << "scene.init_blur_radius=" << g(init_knobs.blur_radius) << '\n'
       << "scene.init_texture_gain=" << g(init_knobs.texture_gain) << '\n'
       << "cf.k_cf=" << cf.k_cf << '\n'
       << "cf.steps=" << cf.steps << '\n'
       << "cf.mask_resolution=" << cf.mask_resolution << '\n'
       << "cf.lambda_sparsity=" << g(cf.lambda_sparsity) << '\n'
       << "cf.lambda_tv=" << g(cf.lambda_tv) << '\n'
       << "cf.tau_flip_steering=" << g(cf.tau_flip_steering) << '\n'
       << "cf.tau_flip_segmentation=" << g(cf.tau_flip_segmentation) << '\n'
       << "cf.infill=" << (cf.infill == InfillKind::blur ? "blur" : "mean") << '\n'
       << "cf.infill_blur_radius=" << g(cf.infill_blur_radius) << '\n'
       << "cf.step_size=" << g(cf.step_size) << '\n'
       << "cf.base_seed=" << cf.base_seed << '\n'
       << "fidelity.eps_in=" << g(thresholds.eps_in) << '\n'
       << "fidelity.ov_score_cutoff=" << g(thresholds.ov_score_cutoff) << '\n'
       << "fidelity.eps_dff=" << g(thresholds.eps_dff) << '\n';
    if (thresholds.eps_lf) os << "fidelity.eps_lf=" << g(*thresholds.eps_lf) << '\n';
    os << "calibration.total_steps=" << calibration.total_steps << '\n'
       << "calibration.beta=" << g(calibration.beta) << '\n'
       << "calibration.lambda_dff=" << g(calibration.lambda_dff) << '\n'
       << "calibration.dff_every=" << calibration.dff_every << '\n'
       << "calibration.es_population=" << calibration.es_population << '\n'
       << "calibration.es_sigma=" << g(calibration.es_sigma) << '\n'
       << "calibration.es_every=" << calibration.es_every << '\n'
       << "calibration.lr_primary=" << g(calibration.lr_primary) << '\n'
       << "calibration.lr_post=" << g(calibration.lr_post) << '\n'
       << "calibration.fd_h=" << g(calibration.fd_h) << '\n'
       << "calibration.checkpoint_every=" << calibration.checkpoint_every << '\n'
       << "calibration.cf_k_cf=" << calibration.cf_loss.k_cf << '\n'
       << "calibration.cf_steps=" << calibration.cf_loss.steps << '\n'
       << "calibration.grad_k_cf=" << calibration.cf_grad.k_cf << '\n'
       << "calibration.grad_steps=" << calibration.cf_grad.steps << '\n'
       << "calibration.es_k_cf=" << calibration.cf_es.k_cf << '\n'
       << "calibration.es_steps=" << calibration.cf_es.steps << '\n'
       << "stats.bootstrap_resamples=" << bootstrap.resamples << '\n'
       << "stats.bootstrap_seed=" << bootstrap.seed << '\n'
       << "stats.ni_margin_steering=" << g(ni_margin_steering) << '\n'
       << "stats.ni_margin_segmentation=" << g(ni_margin_segmentation) << '\n';
    return os.str();
}

std::string RunConfig::config_hash() const { return hash_hex(fnv1a64(canonical())); }

}  // namespace mfid
