#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace htq {

// SplitMix64 step; used only to derive independent stream seeds from a master
// seed and a tag path, so that (replication, epsilon-point) pairs get streams
// that do not depend on scheduling order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t t : path) h = splitmix64(h ^ (t + 0x9e3779b97f4a7c15ull));
    return h;
}

// Seedable stream. Draw helpers avoid std::uniform_*_distribution so the
// produced sequence is fixed by the seed alone, not by the standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Lemire's multiply-shift rejection.
    std::uint64_t below(std::uint64_t n) {
        __uint128_t m = static_cast<__uint128_t>(u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t t = (-n) % n;
            while (lo < t) {
                m = static_cast<__uint128_t>(u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::size_t pick(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  private:
    std::mt19937_64 eng_;
};

}  // namespace htq
