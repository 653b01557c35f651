#include "mfid/rng.hpp"

#include <cmath>

#include "mfid/hashing.hpp"

namespace mfid {

namespace {
constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;
}

Rng::Rng(uint64_t seed) : key_(mix64(seed ^ kGolden)), counter_(0) {}

uint64_t Rng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

float Rng::next_float() {
    return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
}

int64_t Rng::next_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    // Multiply-shift bounded draw; bias is < 2^-64 per value, irrelevant here.
    const auto hi64 = static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * span) >> 64);
    return lo + static_cast<int64_t>(hi64);
}

double Rng::next_normal() {
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

Rng Rng::split(std::string_view tag, uint64_t index) const {
    const uint64_t child = mix64(key_ ^ fnv1a64(tag) ^ mix64(index + 1));
    return Rng(child, 0);
}

Rng Rng::restore(uint64_t key, uint64_t counter) {
    return Rng(key, counter);
}

}  // namespace mfid
