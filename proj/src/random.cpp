#include "spellscope/random.hpp"

#include <sodium.h>

#include <algorithm>
#include <string>
#include <unordered_set>

#include "spellscope/common.hpp"

namespace spellscope {

ChaChaRng::ChaChaRng(std::uint64_t seed) {
  [[maybe_unused]] static const int sodium_ready = sodium_init();
  for (int i = 0; i < 8; ++i) key_[i] = static_cast<unsigned char>(seed >> (8 * i));
}

void ChaChaRng::refill() {
  static const std::array<unsigned char, 64> kZeros{};
  static const std::array<unsigned char, crypto_stream_chacha20_ietf_NONCEBYTES> kNonce{};
  crypto_stream_chacha20_ietf_xor_ic(block_.data(), kZeros.data(), block_.size(), kNonce.data(),
                                     counter_, key_.data());
  ++counter_;
  pos_ = 0;
}

ChaChaRng::result_type ChaChaRng::operator()() {
  if (pos_ + 8 > block_.size()) refill();
  result_type v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<result_type>(block_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

std::uint64_t ChaChaRng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  __extension__ using u128 = unsigned __int128;
  u128 m = static_cast<u128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::vector<std::uint64_t> sample_without_replacement(std::uint64_t population, std::uint64_t k,
                                                      ChaChaRng& rng) {
  if (k > population) {
    throw Error(ErrorKind::Config, "cannot sample " + std::to_string(k) + " items from a population of " +
                                       std::to_string(population));
  }
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2);
  for (std::uint64_t j = population - k; j < population; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace spellscope
