#pragma once

#include <cmath>
#include <cstdint>

namespace scot {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based stream seed: draw j of a stream seeded with s gets its own
/// generator state, so draws are order-independent and parallelizable.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0x5851f42d4c957f2dULL * (index + 1));
    return splitmix64(s);
}

/// xoshiro-free, self-contained generator; distributions are hand-rolled so
/// sample streams are bit-identical across standard libraries.
class rng {
public:
    explicit rng(std::uint64_t seed) : state_(seed) {
        // warm up so nearby seeds decorrelate
        next();
        next();
    }

    std::uint64_t next() { return splitmix64(state_); }

    /// Uniform on [0,1) with 53 random mantissa bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * unit(); }

    /// Standard normal via Marsaglia polar; one value per call, spare cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * unit() - 1.0;
            v = 2.0 * unit() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Index uniform on [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(unit() * static_cast<double>(n)) % n;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace scot
