#pragma once

#include <cstdint>
#include <string_view>

namespace handover {

// SplitMix64. All randomness in the toolkit flows through this generator so
// that runs are byte-reproducible from a single seed regardless of platform
// or standard library; std::<distribution> output is not pinned by the
// standard, so none of those are used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Rejection-free multiply-shift is fine here: bound
  // sizes are tiny compared to 2^64 so the bias is far below anything a
  // test could observe, and the mapping is fixed forever.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double uniform() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

// Named sub-seed derivation: every consumer of randomness gets its own
// stream keyed by (master seed, label), e.g. derive_seed(7, "bench/hammer-0/b1/trial3").
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  std::uint64_t h = fnv1a64(label);
  // one splitmix scramble so master=0 still yields a well-mixed stream
  std::uint64_t z = (h ^ (master + 0x9e3779b97f4a7c15ull)) + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace handover
