#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace synthvol {

// FNV-1a, used to key streams by string (subject id, stage name).
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ull);

// Raw Philox4x32-10 block function (key words in low, high order).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// Counter-based random stream (Philox4x32-10).
//
// A stream is identified by a 64-bit key. Every draw is a pure function of
// (key, counter), so the value at a given index never depends on how many
// draws happened before it or on which thread asks for it. Child streams
// come from derive(); the batch scheduler keys them by
// (seed, subject, iteration, sample, stage).
//
// Two counter spaces are kept apart: the *_at(index) accessors address
// the indexed space, the stateful accessors walk a separate sequential space.
class Rng {
public:
    explicit Rng(std::uint64_t key = 0) : key_(key) {}

    std::uint64_t key() const { return key_; }

    Rng derive(std::string_view tag) const;
    Rng derive(std::uint64_t value) const;

    std::uint64_t bits_at(std::uint64_t index) const;
    // Uniform on [0, 1).
    double uniform_at(std::uint64_t index) const;
    // Standard normal (Box-Muller on one Philox block).
    double normal_at(std::uint64_t index) const;
    // Both Box-Muller variates of the block at `index`; the first one is
    // normal_at(index). Voxel loops use component i % 2 of pair i / 2.
    std::array<double, 2> normal_pair_at(std::uint64_t index) const;

    std::uint64_t next_bits();
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    // Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace synthvol
