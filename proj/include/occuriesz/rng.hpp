#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <random>

namespace occuriesz {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed for replication `index` derived from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + (index + 1) * kGolden);
}

// Counter-based generator: output k is mix64(key + k * golden). The key is a hash of
// (seed, stream, substream), so streams never share state and can be created in any order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0)
      : key_(mix64(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL)) ^
                   (substream * 0xAEF17502108EF2D9ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }

  // Uniform on the open interval (0, 1).
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  double normal() { return normal_(*this); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_;
};

void fill_normal(CounterRng& rng, Eigen::Ref<Eigen::VectorXd> out);

}  // namespace occuriesz
