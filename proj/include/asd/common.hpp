#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace asd {

// Deterministic 64-bit FNV-1a. Used for config hashes and for deriving
// per-item RNG streams from a base seed, so results never depend on
// iteration order or platform hash tables.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 14695981039346656037ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 14695981039346656037ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

// Seed an engine from a base seed plus a stream tag (e.g. "synth/fan/2").
inline std::mt19937_64 make_rng(std::uint64_t seed, const std::string& tag) {
    std::uint64_t h = fnv1a64(tag, seed * 1099511628211ULL + 14695981039346656037ULL);
    return std::mt19937_64(h);
}

struct AsdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace asd
