#pragma once

#include <cstdint>
#include <string_view>

namespace mfid {

// Counter-based deterministic generator. Draws are a pure function of
// (key, counter), so two instances built from the same seed emit bit-identical
// sequences independent of platform. Substreams are derived from the
// construction key (not the draw position): split(tag, i) yields the same
// child stream no matter how many values were drawn from the parent.
//
// Instances are single-caller; hand each thread its own split().
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    // Uniform in [0, 1), 53-bit resolution; exact integer arithmetic.
    double next_double();
    float next_float();
    // Uniform integer in [lo, hi] inclusive.
    int64_t next_int(int64_t lo, int64_t hi);
    // Standard normal via Box-Muller (two uniform draws per call).
    double next_normal();

    Rng split(std::string_view tag, uint64_t index) const;

    // State capture for checkpointing.
    uint64_t key() const { return key_; }
    uint64_t counter() const { return counter_; }
    static Rng restore(uint64_t key, uint64_t counter);

private:
    Rng(uint64_t key, uint64_t counter) : key_(key), counter_(counter) {}
    uint64_t key_;
    uint64_t counter_;
};

}  // namespace mfid
