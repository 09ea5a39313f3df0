#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace slax {

// splitmix64 step: advances `state` and returns the next output.
// Used for seed expansion and seed hashing; stable across platforms.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives a child seed from (seed, value). Folding this over a path of
// indices gives the documented substream scheme:
//   row_seed = fold(base_seed, {method_id, K, rep_index, domain_index})
// The scheme is part of the file-format/reproducibility contract and must
// not change between versions.
inline std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t value) {
    std::uint64_t state = seed ^ (value + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
    return splitmix64_next(state);
}

inline std::uint64_t seed_path(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = base;
    for (std::uint64_t p : path) s = seed_combine(s, p);
    return s;
}

// xoshiro256++ by Blackman & Vigna. Chosen over std engines because the
// full generator (engine plus the double/bounded-int derivations below) is
// bit-reproducible across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
        // All-zero state is the one invalid seed for xoshiro.
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    // Substream constructor: Rng(seed_path(base, {...})).
    static Rng substream(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
        return Rng(seed_path(base, path));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, bound) by rejection; unbiased and portable.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not.
    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> state_{};
};

} // namespace slax
