#pragma once

#include <cstdint>
#include <random>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace spatial_smooth {

// mt19937_64 and seed_seq are bit-specified by the standard; the boost
// distributions are used instead of <random>'s because their algorithms are
// fixed across standard library implementations.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  return Rng(seq);
}

inline double std_normal(Rng& rng) { return boost::random::normal_distribution<double>(0.0, 1.0)(rng); }

inline double uniform01(Rng& rng) { return boost::random::uniform_01<double>()(rng); }

/// Gamma(shape, rate) draw.
inline double gamma_rate(Rng& rng, double shape, double rate) {
  return boost::random::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

}  // namespace spatial_smooth
