#pragma once

#include <cstdint>
#include <random>

namespace tsiv {

// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

// Seed of the independent stream identified by (seed, replicate, stream).
// Streams depend only on their key, never on the order they are requested,
// so serial and parallel runs draw identical numbers.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream);

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream);

}  // namespace tsiv
