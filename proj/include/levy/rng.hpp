#pragma once

#include <bit>
#include <cstdint>
#include <cstring>

namespace levy {

/// Counter-based generator: each (key, counter) pair maps to an independent
/// stream, so sample i can be drawn without touching samples 0..i-1.
class CounterRng {
public:
    CounterRng(std::uint64_t key, std::uint64_t counter) : state_(mix(key ^ mix(counter + 0x9e3779b97f4a7c15ULL))) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform on (0, 1): never returns 0 or 1.
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1p-53; }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Stream key from a seed, a spec hash and a time.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t spec_hash, double t) {
    const auto tb = std::bit_cast<std::uint64_t>(t);
    return CounterRng::mix(CounterRng::mix(seed ^ 0x5bd1e9955bd1e995ULL) ^ CounterRng::mix(spec_hash) ^
                           CounterRng::mix(tb + 0x2545f4914f6cdd1dULL));
}

}  // namespace levy
