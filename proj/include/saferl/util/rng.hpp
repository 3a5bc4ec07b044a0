#pragma once

#include <cstdint>
#include <vector>

namespace saferl {

// splitmix64 step; also used to mix seeds for independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent seed from (base, stream, index). Streams let the
// training loops keep rollout, shuffling, critic-fitting and attack
// randomness separate so optional components never perturb shared ones.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index = 0) noexcept;

// Small deterministic generator (xoshiro256** seeded via splitmix64).
// Gaussian draws use Box-Muller with no cached spare so the draw count per
// call is fixed, which keeps interleaved streams reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;  // [0, 1)
  double uniform(double lo, double hi) noexcept;
  double normal() noexcept;   // standard normal
  int uniform_int(int lo, int hi) noexcept;  // inclusive bounds
  void fill_normal(std::vector<double>& out, std::size_t n);

 private:
  std::uint64_t s_[4];
};

}  // namespace saferl
