#pragma once

#include <filesystem>
#include <string>

#include "mfid/sut.hpp"

namespace mfid::test {

// Shared fixture cache under the build tree. Reference SUTs are trained once
// per recipe and reused across test binaries; training is deterministic, so
// loading is equivalent to retraining.
std::filesystem::path cache_dir();

const ReferenceSut& trained_steering_sut();
const ReferenceSut& trained_drivable_sut();

// Reduced recipe (fast) variants for tests that just need a plausible
// frozen network rather than the full reference training run.
const ReferenceSut& quick_steering_sut();
const ReferenceSut& quick_drivable_sut();

// Fresh scratch directory under the build tree; wiped on entry.
std::filesystem::path scratch_dir(const std::string& name);

std::filesystem::path cli_path();

}  // namespace mfid::test
