#pragma once

// Deterministic random-source discipline for the whole laboratory.
//
// Every stochastic component draws from an Rng that is derived from a master
// seed plus a list of integer tags (replicate number, generation, cell, ...).
// Sub-stream derivation is an order-sensitive SplitMix64 chain:
//
//     s = seed
//     for each tag:  s = mix64(s ^ mix64(tag + 0x9e3779b97f4a7c15))
//
// so the same (seed, tags...) always names the same stream, independent of
// the order in which streams are consumed or of any threading.
//
// The generator itself is xoshiro256++ seeded from the derived value via
// SplitMix64. std::uniform_*_distribution is deliberately avoided: its
// output is implementation-defined, and run records are promised to be
// bit-reproducible for a given seed.

#include <bit>
#include <cstdint>
#include <initializer_list>

namespace cealab {

/// SplitMix64 finalizer: bijective 64-bit avalanche mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a sub-stream seed from a master seed and one tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix64(seed ^ mix64(tag + 0x9e3779b97f4a7c15ULL));
}

/// Derive a sub-stream seed from a master seed and a tag list (chained, order-sensitive).
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t s = seed;
    for (std::uint64_t t : tags)
        s = derive_seed(s, t);
    return s;
}

/// xoshiro256++ with SplitMix64 seeding. Cheap to construct, so a fresh
/// instance per (generation, cell) sub-stream costs almost nothing.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            word = mix64(sm);
        }
    }

    /// Stream named by (seed, tags...); see derivation scheme above.
    static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
        return Rng(derive_seed(seed, tags));
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = std::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), unbiased (Lemire rejection). bound >= 1.
    std::uint64_t below(std::uint64_t bound) noexcept {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) noexcept { return static_cast<std::size_t>(below(n)); }

    /// Bernoulli draw with success probability p.
    bool chance(double p) noexcept { return next_double() < p; }

  private:
    std::uint64_t state_[4];
};

/// Fisher-Yates shuffle (uses Rng::below, so reproducible across platforms).
template <typename Container>
void shuffle(Container& c, Rng& rng) {
    for (std::size_t i = c.size(); i > 1; --i) {
        const std::size_t j = rng.index(i);
        using std::swap;
        swap(c[i - 1], c[j]);
    }
}

/// Stable tag for mixing a real-valued parameter (e.g. beta) into a stream name.
inline std::uint64_t seed_tag(double x) noexcept { return std::bit_cast<std::uint64_t>(x); }

} // namespace cealab
