#pragma once

#include <cmath>
#include <cstdint>

namespace eeamc {

// xoshiro256** seeded through splitmix64. Self-contained so that streams are
// reproducible bit-for-bit across standard libraries and platforms; the
// <random> distributions make no such guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift bounded draw; bias is < 2^-64 and irrelevant here.
        return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller, one value per call.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent child stream; `tag` separates streams derived from one parent.
    Rng fork(std::uint64_t tag) {
        std::uint64_t mix = next_u64() ^ (tag * 0x9e3779b97f4a7c15ULL);
        return Rng(mix);
    }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Stateless mix of several words into one seed. Used to derive
    // per-example generator seeds from (master, label, snr, index).
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b,
                             std::uint64_t c = 0, std::uint64_t d = 0) {
        std::uint64_t x = a;
        std::uint64_t h = splitmix64(x);
        x ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= splitmix64(x);
        x ^= c + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= splitmix64(x);
        x ^= d + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return splitmix64(x);
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t state_[4];
};

// Deterministic in-place Fisher-Yates; std::shuffle's draw pattern is
// implementation-defined, this one is not.
template <typename T>
void deterministic_shuffle(T* first, std::size_t n, Rng& rng) {
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = std::size_t(rng.uniform_index(i));
        T tmp = first[i - 1];
        first[i - 1] = first[j];
        first[j] = tmp;
    }
}

} // namespace eeamc
