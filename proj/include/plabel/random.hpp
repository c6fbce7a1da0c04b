#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace plabel {

struct Seed {
    std::uint64_t value = 0;
};

// splitmix64 step:
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
std::uint64_t splitmix64(std::uint64_t& state);

// Pure mixing of a master seed with a list of stream identifiers. Used to give
// every (axis, repetition, strategy) cell of a sweep its own independent stream.
Seed derive_seed(Seed master, std::span<const std::uint64_t> path);

inline Seed derive_seed(Seed master, std::initializer_list<std::uint64_t> path) {
    return derive_seed(master, std::span<const std::uint64_t>(path.begin(), path.size()));
}

/// xoshiro256** generator, seeded by four splitmix64 draws.
///
///   result = rotl(s1 * 5, 7) * 9
///   t = s1 << 17
///   s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3
///   s2 ^= t;  s3 = rotl(s3, 45)
///
/// Uniform doubles take the top 53 bits; normals use the Box-Muller transform
/// with the sine branch cached. Bounded integers use rejection on the top bits
/// so every stream is reproducible independent of the standard library.
class Rng {
public:
    explicit Rng(Seed seed);

    std::uint64_t next_u64();
    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    double normal();
    std::size_t below(std::size_t bound);    // [0, bound)

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t s_[4];
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace plabel
