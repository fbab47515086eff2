#include "synthvol/rng.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace synthvol {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

using Block = std::array<std::uint32_t, 4>;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = std::uint64_t(a) * std::uint64_t(b);
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

Block philox4x32_10(Block ctr, std::uint64_t key64) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key64);
    std::uint32_t k1 = static_cast<std::uint32_t>(key64 >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline double to_unit(std::uint64_t bits) {
    return double(bits >> 11) * 0x1.0p-53;
}

inline Block block_at(std::uint64_t key, std::uint64_t index, std::uint32_t space) {
    return philox4x32_10({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), space, 0u},
                         key);
}

inline double box_muller(const Block& b) {
    const std::uint64_t a = (std::uint64_t(b[1]) << 32) | b[0];
    const std::uint64_t c = (std::uint64_t(b[3]) << 32) | b[2];
    const double u1 = 1.0 - to_unit(a); // (0, 1]
    const double u2 = to_unit(c);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::array<double, 2> box_muller_pair(const Block& b) {
    const std::uint64_t a = (std::uint64_t(b[1]) << 32) | b[0];
    const std::uint64_t c = (std::uint64_t(b[3]) << 32) | b[2];
    const double r = std::sqrt(-2.0 * std::log(1.0 - to_unit(a)));
    const double t = 2.0 * std::numbers::pi * to_unit(c);
    return {r * std::cos(t), r * std::sin(t)};
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key) {
    return philox4x32_10(counter, (std::uint64_t(key[1]) << 32) | key[0]);
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

Rng Rng::derive(std::string_view tag) const {
    return Rng(splitmix64(key_ ^ splitmix64(fnv1a64(tag))));
}

Rng Rng::derive(std::uint64_t value) const {
    return Rng(splitmix64(key_ ^ splitmix64(value ^ 0x5851F42D4C957F2Dull)));
}

std::uint64_t Rng::bits_at(std::uint64_t index) const {
    const Block b = block_at(key_, index, 0u);
    return (std::uint64_t(b[1]) << 32) | b[0];
}

double Rng::uniform_at(std::uint64_t index) const {
    return to_unit(bits_at(index));
}

double Rng::normal_at(std::uint64_t index) const {
    return box_muller(block_at(key_, index, 0u));
}

std::array<double, 2> Rng::normal_pair_at(std::uint64_t index) const {
    return box_muller_pair(block_at(key_, index, 0u));
}

std::uint64_t Rng::next_bits() {
    const Block b = block_at(key_, counter_++, 1u);
    return (std::uint64_t(b[1]) << 32) | b[0];
}

double Rng::uniform() {
    return to_unit(next_bits());
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    return box_muller(block_at(key_, counter_++, 1u));
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) {
        return lo;
    }
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = span == 0 ? 0 : (~std::uint64_t(0) - (~std::uint64_t(0) % span));
    std::uint64_t x = next_bits();
    while (span != 0 && x >= limit) {
        x = next_bits();
    }
    return lo + static_cast<std::int64_t>(span == 0 ? x : x % span);
}

} // namespace synthvol
