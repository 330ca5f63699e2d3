#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace oqe {

/// Seedable, portable PRNG used by every stochastic routine in the library.
///
/// The engine is std::mt19937_64 (bit-exact across platforms by the standard)
/// and all derived samples avoid the implementation-defined distribution
/// adaptors: uniforms come from the top 53 bits, Gaussians from Box-Muller.
/// The same seed therefore reproduces the same stream everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed_used() const { return seed_; }

    /// Uniform draw in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw (Box-Muller, cached pair).
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Complex Gaussian with independent N(0,1) real and imaginary parts.
    std::complex<double> gaussian_complex() {
        const double re = gaussian();
        const double im = gaussian();
        return {re, im};
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection sampling keeps the draw unbiased and portable.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

  private:
    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

} // namespace oqe
