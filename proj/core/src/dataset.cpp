#include "mfid/dataset.hpp"

#include <fstream>

#include <json.hpp>

#include "mfid/errors.hpp"
#include "mfid/image_io.hpp"

namespace mfid {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json sd_to_json(const ScenarioDescription& sd) {
    ordered_json j;
    j["road_curvature"] = sd.road_curvature;
    j["lane_count"] = sd.lane_count;
    j["sun_elevation"] = sd.sun_elevation;
    j["obstacle_lateral_offset"] = sd.obstacle_lateral_offset;
    j["obstacle_present"] = sd.obstacle_present;
    j["decoy_sign_present"] = sd.decoy_sign_present;
    return j;
}

ScenarioDescription sd_from_json(const ordered_json& j) {
    ScenarioDescription sd;
    sd.road_curvature = j.at("road_curvature").get<double>();
    sd.lane_count = j.at("lane_count").get<int>();
    sd.sun_elevation = j.at("sun_elevation").get<double>();
    sd.obstacle_lateral_offset = j.at("obstacle_lateral_offset").get<double>();
    sd.obstacle_present = j.at("obstacle_present").get<bool>();
    sd.decoy_sign_present = j.at("decoy_sign_present").get<bool>();
    sd.validate();
    return sd;
}

ordered_json knobs_to_json(const GeneratorKnobs& k) {
    ordered_json j;
    j["seed"] = k.seed;
    j["style_strength"] = k.style_strength;
    j["contrast"] = k.contrast;
    j["brightness"] = k.brightness;
    j["blur_radius"] = k.blur_radius;
    j["texture_gain"] = k.texture_gain;
    return j;
}

GeneratorKnobs knobs_from_json(const ordered_json& j) {
    return GeneratorKnobs::clamped(
        j.at("seed").get<uint64_t>(), j.at("style_strength").get<float>(),
        j.at("contrast").get<float>(), j.at("brightness").get<float>(),
        j.at("blur_radius").get<float>(), j.at("texture_gain").get<float>());
}

}  // namespace

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    ordered_json j;
    j["version"] = m.version;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    ordered_json records = ordered_json::array();
    for (const auto& r : m.records) {
        ordered_json rec;
        rec["id"] = r.id;
        rec["sd"] = sd_to_json(r.sd);
        rec["real"] = r.real_path;
        rec["synthetic"] = r.synth_path;
        rec["knobs"] = knobs_to_json(r.knobs);
        rec["split"] = r.split;
        records.push_back(std::move(rec));
    }
    j["records"] = std::move(records);

    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("manifest parse error: " + std::string(e.what()));
    }
    Manifest m;
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    for (const auto& rec : j.at("records")) {
        DatasetRecord r;
        r.id = rec.at("id").get<std::string>();
        r.sd = sd_from_json(rec.at("sd"));
        r.real_path = rec.at("real").get<std::string>();
        r.synth_path = rec.at("synthetic").get<std::string>();
        r.knobs = knobs_from_json(rec.at("knobs"));
        r.split = rec.at("split").get<std::string>();
        if (r.split != "calibration" && r.split != "heldout")
            throw IoError("manifest split must be calibration|heldout");
        m.records.push_back(std::move(r));
    }
    return m;
}

PairedSample load_pair(const DatasetRecord& rec, const std::filesystem::path& manifest_dir) {
    PairedSample p;
    p.id = rec.id;
    p.sd = rec.sd;
    p.x_r = read_image_raw(manifest_dir / rec.real_path);
    p.x_s_init = read_image_raw(manifest_dir / rec.synth_path);
    p.knobs_init = rec.knobs;
    return p;
}

}  // namespace mfid
