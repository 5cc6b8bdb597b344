#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace spellscope {

/// Counter-mode ChaCha20 keystream generator (IETF variant, 96-bit zero nonce).
///
/// The 64-bit seed is written little-endian into the first eight key bytes;
/// the remaining key bytes are zero. Output words are consecutive 8-byte
/// little-endian chunks of the keystream, so sequences are identical on every
/// platform.
class ChaChaRng {
 public:
  using result_type = std::uint64_t;

  explicit ChaChaRng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform integer in [0, bound) by Lemire's multiply-and-reject method.
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  std::array<unsigned char, 32> key_{};
  std::array<unsigned char, 64> block_{};
  std::uint32_t counter_ = 0;
  std::size_t pos_ = 64;
};

/// k distinct integers from [0, population), ascending. Floyd's algorithm.
/// Throws Error(Config) when k > population.
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population, std::uint64_t k,
                                                      ChaChaRng& rng);

}  // namespace spellscope
