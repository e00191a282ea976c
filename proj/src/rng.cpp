#include "tsiv/rng.hpp"

namespace tsiv {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream) {
  return mix64(mix64(mix64(seed) ^ replicate) ^ (stream * 0xd1b54a32d192ed03ULL));
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream) {
  const std::uint64_t s = stream_seed(seed, replicate, stream);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace tsiv
