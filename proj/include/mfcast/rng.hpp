#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mfcast {

// Seed wrapper; the same seed always yields a bit-identical stream.
struct RandomSeed {
    std::uint64_t value = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// xoshiro256++ with splitmix64 seeding. Self-contained so streams are
// identical across standard libraries and platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }
    explicit Rng(RandomSeed seed) : Rng(seed.value) {}

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

    // Uniform double in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Marsaglia polar; one spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        has_spare_ = true;
        return u * factor;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Unbiased integer in [0, n) by rejection.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= bound);
        return static_cast<std::size_t>(r % n);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent child stream from a master seed, a stream name and a
// counter. Adding new named streams never perturbs existing ones.
inline Rng substream(RandomSeed master, std::string_view name, std::uint64_t counter = 0) {
    std::uint64_t s = master.value;
    std::uint64_t h = detail::splitmix64(s) ^ detail::fnv1a(name);
    h ^= 0x2545f4914f6cdd1dULL * (counter + 1);
    return Rng(h);
}

inline RandomSeed subseed(RandomSeed master, std::string_view name, std::uint64_t counter = 0) {
    std::uint64_t s = master.value;
    std::uint64_t h = detail::splitmix64(s) ^ detail::fnv1a(name);
    h ^= 0x2545f4914f6cdd1dULL * (counter + 1);
    return RandomSeed{h};
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.index(i)]);
    }
}

}  // namespace mfcast
