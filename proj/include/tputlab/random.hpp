#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace tputlab {

/// Seeded generator with distributions written out explicitly so that a given
/// seed produces the same stream on every standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; one engine draw pair per call.
    double normal();

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    /// Index drawn with probability proportional to weights (assumed to sum to ~1).
    std::size_t categorical(std::span<const double> weights);

    std::mt19937_64 &engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace tputlab
