#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace mgsim {

/// Seeded generator with platform-independent conversions.
///
/// std::uniform_*_distribution are implementation-defined, so the
/// real/integer draws are derived from the raw mt19937_64 stream directly.
/// Two Rng objects built from the same seed yield identical sequences on
/// every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform integer in [0, n); n must be positive.
    std::size_t below(std::size_t n);

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent stream seeds from one base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace mgsim
