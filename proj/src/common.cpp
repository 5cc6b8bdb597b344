#include "spellscope/common.hpp"

#include <sodium.h>

#include <fstream>

#include "spellscope/digest.hpp"

namespace spellscope {

std::string_view to_string(Side s) { return s == Side::US ? "US" : "UK"; }

std::string_view to_string(Condition c) {
  return c == Condition::Adjacent ? "adjacent" : "nonadjacent";
}

std::optional<Side> parse_side(std::string_view s) {
  if (s == "US" || s == "us") return Side::US;
  if (s == "UK" || s == "uk") return Side::UK;
  return std::nullopt;
}

std::optional<Condition> parse_condition(std::string_view s) {
  if (s == "adjacent") return Condition::Adjacent;
  if (s == "nonadjacent" || s == "non-adjacent") return Condition::NonAdjacent;
  return std::nullopt;
}

namespace {

std::string to_hex(const unsigned char* bytes, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kDigits[bytes[i] >> 4];
    out[2 * i + 1] = kDigits[bytes[i] & 0xf];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  [[maybe_unused]] static const int sodium_ready = sodium_init();
  unsigned char digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(digest, reinterpret_cast<const unsigned char*>(data.data()), data.size());
  return to_hex(digest, sizeof(digest));
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  crypto_hash_sha256_state state;
  crypto_hash_sha256_init(&state);
  std::string buf(1 << 16, '\0');
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) {
      crypto_hash_sha256_update(&state, reinterpret_cast<const unsigned char*>(buf.data()),
                                static_cast<unsigned long long>(got));
    }
  }
  if (in.bad()) throw Error(ErrorKind::Io, "read failed: " + path.string());
  unsigned char digest[crypto_hash_sha256_BYTES];
  crypto_hash_sha256_final(&state, digest);
  return to_hex(digest, sizeof(digest));
}

}  // namespace spellscope
