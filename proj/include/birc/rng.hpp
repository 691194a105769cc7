#pragma once

#include <cstdint>
#include <random>

namespace birc {

using Rng = std::mt19937_64;

// Stream tags keep environment, walk and limit-sampler streams disjoint.
enum class Stream : std::uint64_t {
  Environment = 0x454e56ULL,
  Walk = 0x57414c4bULL,
  Limit = 0x4c494d54ULL,
  Stats = 0x53544154ULL,
  Zeta = 0x5a455441ULL,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

// Seed for replica `id` of stream `tag` under `master`.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t id, Stream tag) {
  return hash_combine(hash_combine(master, static_cast<std::uint64_t>(tag)), id);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t id, Stream tag) {
  return Rng(stream_seed(master, id, tag));
}

// Maps 64 random bits to a double in the open interval (0,1).
constexpr double bits_to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_open(Rng& rng) { return bits_to_open_unit(rng()); }

// Counter-based uniform: a pure function of (seed, index, lane). Used for
// per-site environment draws so that any window over the same seed sees the
// same conductances.
constexpr double counter_uniform(std::uint64_t seed, std::int64_t index, std::uint64_t lane) {
  return bits_to_open_unit(
      hash_combine(hash_combine(seed, static_cast<std::uint64_t>(index)), lane));
}

}  // namespace birc
