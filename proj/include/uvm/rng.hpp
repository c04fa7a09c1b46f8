#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace uvm {

/// Stateless counter-based generator: every draw is a hash of
/// (seed, path, step, stream), so paths can be produced in any order.
/// The mixer is the splitmix64 finalizer applied once per key word.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t path, std::uint64_t step, std::uint64_t stream = 0) const noexcept
    {
        std::uint64_t h = mix(seed_ + 0x9E3779B97F4A7C15ULL);
        h = mix(h ^ (path + 0xD1B54A32D192ED03ULL));
        h = mix(h ^ (step + 0x8CB92BA72F3D8DD7ULL));
        h = mix(h ^ (stream + 0xABC98388FB8FAC03ULL));
        return h;
    }

    /// Uniform on the open interval (0, 1).
    double uniform(std::uint64_t path, std::uint64_t step, std::uint64_t stream = 0) const noexcept
    {
        return (static_cast<double>(bits(path, step, stream) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on streams (2k, 2k + 1).
    double normal(std::uint64_t path, std::uint64_t step, std::uint64_t k = 0) const noexcept
    {
        const double u1 = uniform(path, step, 2 * k);
        const double u2 = uniform(path, step, 2 * k + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
};

} // namespace uvm
