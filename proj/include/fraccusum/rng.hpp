#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace fraccusum {

/// Identifies one replicate's random stream. Identical (master_seed,
/// replicate_index) pairs reproduce bit-identical draws on every run,
/// independent of thread scheduling.
struct Seed {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate_index = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// PCG64 (XSL-RR 128/64). The 128-bit state and the stream increment are
/// both derived from the Seed through a splitmix64 chain, so replicate
/// streams are decorrelated counter-style: the index selects the stream,
/// never the draw order.
class Pcg64 {
public:
    using result_type = std::uint64_t;

    explicit Pcg64(Seed seed) {
        std::uint64_t key = seed.master_seed ^ (0x632BE59BD9B4E019ULL * (seed.replicate_index + 1));
        const std::uint64_t s0 = detail::splitmix64(key);
        const std::uint64_t s1 = detail::splitmix64(key);
        const std::uint64_t inc = detail::splitmix64(key);
        inc_ = ((static_cast<u128>(inc) << 64 | seed.replicate_index) << 1) | 1u;
        state_ = 0;
        next();
        state_ += (static_cast<u128>(s0) << 64) | s1;
        next();
    }

    std::uint64_t next() {
        state_ = state_ * mult() + inc_;
        const std::uint64_t xored = static_cast<std::uint64_t>(state_ >> 64) ^ static_cast<std::uint64_t>(state_);
        const unsigned rot = static_cast<unsigned>(state_ >> 122);
        return (xored >> rot) | (xored << ((-rot) & 63u));
    }

    /// Uniform on (0,1]; never returns 0 so log() below is safe.
    double uniform_pos() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform on [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    using u128 = unsigned __int128;

    static constexpr u128 mult() {
        return (static_cast<u128>(0x2360ED051FC65DA4ULL) << 64) | 0x4385DF649FCCF645ULL;
    }

    u128 state_ = 0;
    u128 inc_ = 0;
};

/// Box-Muller fill. A fixed draw order keeps paths bit-reproducible; an odd
/// tail consumes a full pair and discards the sine half.
inline void fill_standard_normal(Pcg64& rng, std::span<double> out) {
    const double two_pi = 6.283185307179586476925286766559;
    std::size_t i = 0;
    while (i + 1 < out.size()) {
        const double r = std::sqrt(-2.0 * std::log(rng.uniform_pos()));
        const double th = two_pi * rng.uniform();
        out[i++] = r * std::cos(th);
        out[i++] = r * std::sin(th);
    }
    if (i < out.size()) {
        const double r = std::sqrt(-2.0 * std::log(rng.uniform_pos()));
        const double th = two_pi * rng.uniform();
        out[i] = r * std::cos(th);
    }
}

} // namespace fraccusum
