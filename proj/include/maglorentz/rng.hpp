//---------------------------------------------------------------------------//
//! \file maglorentz/rng.hpp
//! Counter-based random streams keyed by integer tuples.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mlg
{
//---------------------------------------------------------------------------//
//! SplitMix64 finalizer: a bijective 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

//! Fold a list of integers into one stream key.
constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts)
{
    std::uint64_t key = 0x6a09e667f3bcc909ULL;
    for (auto p : parts)
    {
        key = mix64(key ^ mix64(p));
    }
    return key;
}

//---------------------------------------------------------------------------//
/*!
 * Counter-based generator: the n-th output is mix64(key + n * golden).
 *
 * Satisfies UniformRandomBitGenerator, so it drives the standard
 * distributions. Two streams with distinct keys are independent for all
 * practical purposes, and a stream can be recreated anywhere from its key.
 */
class CounterRng
{
  public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) : key_{key} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max()
    {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()()
    {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * (counter_++));
    }

    //! Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() { return ((*this)() >> 11) * 0x1.0p-53; }

    constexpr std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace mlg
