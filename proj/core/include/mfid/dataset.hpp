#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfid/scene.hpp"

namespace mfid {

struct DatasetRecord {
    std::string id;
    ScenarioDescription sd;
    std::string real_path;   // relative to the manifest directory
    std::string synth_path;
    GeneratorKnobs knobs;
    std::string split;  // "calibration" | "heldout"
};

struct Manifest {
    std::string version;
    std::string config_hash;
    uint64_t seed = 0;
    std::vector<DatasetRecord> records;
};

void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

// Loads the pair images referenced by a record (paths resolved against the
// manifest directory).
PairedSample load_pair(const DatasetRecord& rec, const std::filesystem::path& manifest_dir);

}  // namespace mfid
