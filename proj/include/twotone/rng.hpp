// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>
#include <utility>

namespace twotone {

// 64-bit FNV-1a. Used to turn stage/follower labels into sub-stream keys and
// for scenario digests.
std::uint64_t fnv1a64(std::string_view bytes);

// SplitMix64 generator. Identical seeds give identical streams on every
// platform; all randomness in the simulator flows through this type.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Two independent standard normals (Box-Muller on the next two draws).
    std::pair<double, double> gaussian_pair();

    // Independent stream keyed by label: SplitMix64(seed XOR fnv1a64(label)).
    // Depends only on the construction seed, never on how far this stream
    // has advanced, so parallel units can derive their streams in any order.
    Rng substream(std::string_view label) const;

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace twotone
