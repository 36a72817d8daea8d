#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>

namespace sparsemix {

//---------------------------------------------------------------------------//
/*!
 * SplitMix64: used to expand seeds and to derive independent stream keys.
 */
class SplitMix64
{
  public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t operator()()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

/// Seed for the stream identified by `path` below `master`.
/// Replication r of an experiment uses derive_seed(master, {cell, r}), so the
/// data a replication sees does not depend on scheduling.
constexpr std::uint64_t
derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t key = SplitMix64(master ^ 0x6a09e667f3bcc909ull)();
    for (std::uint64_t component : path) {
        key = SplitMix64(key ^ SplitMix64(component + 0xbb67ae8584caa73bull)())();
    }
    return key;
}

//---------------------------------------------------------------------------//
/*!
 * xoshiro256** engine seeded through SplitMix64.
 *
 * Satisfies UniformRandomBitGenerator. See https://prng.di.unimi.it.
 */
class Xoshiro256
{
  public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256(std::uint64_t seed)
    {
        SplitMix64 sm(seed);
        for (auto& word : s_)
            word = sm();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()()
    {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k)
    {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

//---------------------------------------------------------------------------//
/*!
 * Random stream with platform-independent uniform and Gaussian variates.
 *
 * std::normal_distribution is implementation defined, so Box-Muller is done
 * here to keep datasets bit-identical across standard libraries.
 */
class RandomStream
{
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_zero()
    {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double radius = std::sqrt(-2.0 * std::log(uniform_open_zero()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    bool bernoulli(double prob) { return uniform() < prob; }

    Xoshiro256& engine() { return engine_; }

  private:
    Xoshiro256 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sparsemix
