#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace mfscope {

// Named random streams. Every consumer of randomness derives its own engine
// from the single user seed and one of these ids.
enum class Stream : std::uint64_t {
    sample = 1,
    rotation = 2,
    noise = 3,
    random_pairs = 4,
    instances = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based fan-out of a master seed into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t counter = 0) noexcept
{
    return splitmix64(splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream))) + counter);
}

/// Thin wrapper over mt19937_64 with portable real-valued draws.
///
/// The distributions in <random> are implementation-defined, so uniform and
/// normal variates are produced here from raw 64-bit outputs to keep generated
/// bytes identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng(std::uint64_t master, Stream stream, std::uint64_t counter = 0)
        : engine_(derive_seed(master, stream, counter))
    {
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling avoids modulo bias.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
        std::uint64_t r = engine_();
        while (r >= limit)
            r = engine_();
        return r % n;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace mfscope
