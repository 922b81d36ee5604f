#ifndef COALEX_RNG_HPP
#define COALEX_RNG_HPP

#include <cstdint>

namespace coalex {

// Counter-based pseudo-random streams. Every draw is a pure function of
// (seed, tag, counter), so results do not depend on evaluation order or on
// how work is split across threads. The mixer is the SplitMix64 finalizer
// applied to a combined key.
namespace rng_detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d49bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

} // namespace rng_detail

/// A deterministic random stream identified by (seed, tag). Tags separate
/// independent uses of the same master seed (one per task, row, draw, ...).
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t tag)
        : key_(rng_detail::combine(rng_detail::mix64(seed), rng_detail::mix64(tag))) {}

    /// Derive a sub-stream; substream(i) != substream(j) for i != j.
    Stream substream(std::uint64_t tag) const {
        Stream s(*this);
        s.key_ = rng_detail::combine(key_, rng_detail::mix64(tag));
        s.counter_ = 0;
        return s;
    }

    std::uint64_t next_u64() { return rng_detail::mix64(key_ ^ counter_++); }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Multiply-shift; bias is negligible for n << 2^64.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace coalex

#endif
