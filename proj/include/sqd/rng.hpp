#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

namespace sqd {

// Deterministic 64-bit generator (splitmix64, Vigna 2015). The state advances
// by a fixed odd increment on every draw and the output is a bijective mix of
// the state, so the n-th output for a given seed is mix(seed + (n+1)*kGamma)
// on every platform and standard library. Reference outputs are frozen in
// tests/rng_test.cpp; all distribution helpers below are spelled out here so
// a simulation trace can be reproduced bit-for-bit from the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += kGamma);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Fair coin: top bit of the next draw.
  bool coin() { return (next_u64() >> 63) != 0; }

  // Uniform integer in [0, n). Rejection sampling on the low residue keeps
  // the distribution exact: (0 - n) % n == 2^64 mod n in wrapping arithmetic.
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Fisher-Yates from the back, one below() call per step.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // k distinct indices from [0, n), returned ascending (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    assert(k <= n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(idx[i], idx[i + below(n - i)]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
  std::uint64_t state_;
};

// Independent child seed for stream `index` of `seed`: the (index+1)-th raw
// output of Rng(seed). Used to fan a master seed out to per-trial generators
// without sharing state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  Rng r(seed + index * 0x9e3779b97f4a7c15ull);
  return r.next_u64();
}

}  // namespace sqd
