#include "support.hpp"

#include <cstdio>

namespace mfid::test {

std::filesystem::path cache_dir() {
    const std::filesystem::path dir = MFID_TEST_CACHE_DIR;
    std::filesystem::create_directories(dir);
    return dir;
}

namespace {

const ReferenceSut& cached_sut(SutTask task, const TrainRecipe& recipe, const char* name,
                               ReferenceSut& slot, bool& loaded) {
    if (!loaded) {
        const auto path = cache_dir() / (std::string(name) + ".mfwt");
        if (!std::filesystem::exists(path))
            std::fprintf(stderr, "[fixture] training %s (cached at %s)\n", name,
                         path.string().c_str());
        slot = load_or_train_sut(task, path, recipe);
        loaded = true;
    }
    return slot;
}

}  // namespace

const ReferenceSut& trained_steering_sut() {
    static ReferenceSut sut;
    static bool loaded = false;
    return cached_sut(SutTask::steer, TrainRecipe{}, "sut_steer_full", sut, loaded);
}

const ReferenceSut& trained_drivable_sut() {
    static ReferenceSut sut;
    static bool loaded = false;
    return cached_sut(SutTask::drivable, TrainRecipe{}, "sut_da_full", sut, loaded);
}

const ReferenceSut& quick_steering_sut() {
    static ReferenceSut sut;
    static bool loaded = false;
    TrainRecipe r;
    r.steps = 300;
    r.train_images = 200;
    return cached_sut(SutTask::steer, r, "sut_steer_quick", sut, loaded);
}

const ReferenceSut& quick_drivable_sut() {
    static ReferenceSut sut;
    static bool loaded = false;
    TrainRecipe r;
    r.steps = 300;
    r.train_images = 200;
    return cached_sut(SutTask::drivable, r, "sut_da_quick", sut, loaded);
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = cache_dir() / "scratch" / name;
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    std::filesystem::create_directories(dir);
    return dir;
}

std::filesystem::path cli_path() { return MFID_CLI_PATH; }

}  // namespace mfid::test
