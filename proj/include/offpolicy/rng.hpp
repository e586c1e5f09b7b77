#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace offpolicy {

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-independent key derivation for seeding streams from tuples like
// (scenario id, seed, cell index). Not order-independent actually: each part
// is folded in sequence, which is what we want.
inline std::uint64_t hash_combine64(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Counter-based generator: output i is a pure function of (key, i), so any
// number of independent streams can be split off without shared mutable
// state. The sequence for a fixed key is exactly SplitMix64 seeded with key.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static CounterRng from_parts(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x8f1bbcdcbfa53e0bULL;
    for (auto p : parts) h = hash_combine64(h, p);
    return CounterRng(h);
  }

  // Independent child stream. Distinct stream ids give distinct keys.
  CounterRng split(std::uint64_t stream) const {
    return CounterRng(hash_combine64(key_, stream));
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ + counter_);
  }

  // Uniform on [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log argument.
  double next_double_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Box-Muller without caching so the draw count stays predictable.
  double next_gaussian() {
    const double u1 = next_double_pos();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Index into [0, n).
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_double() * static_cast<double>(n)) %
           n;
  }

  // Sample from an (unnormalized) nonnegative weight vector.
  int next_categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t a = 0; a < weights.size(); ++a) {
      acc += weights[a];
      if (u < acc) return static_cast<int>(a);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// In-place Fisher-Yates over indices [0, n).
template <typename T>
void shuffle_inplace(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.next_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace offpolicy
