#include "mpcnet/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace mpcnet {

Digest sha3_256(const std::uint8_t* data, std::size_t len) {
  Digest out{};
  unsigned int outlen = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha3_256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, len) != 1 ||
      EVP_DigestFinal_ex(ctx, out.data(), &outlen) != 1 || outlen != 32) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha3_256 failed");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

Digest sha3_256(const Bytes& data) { return sha3_256(data.data(), data.size()); }

Digest sha3_256(const std::string& data) {
  return sha3_256(reinterpret_cast<const std::uint8_t*>(data.data()), data.size());
}

static const char* kHexDigits = "0123456789abcdef";

std::string hex_encode(const std::uint8_t* data, std::size_t len) {
  std::string s;
  s.reserve(2 * len);
  for (std::size_t i = 0; i < len; i++) {
    s.push_back(kHexDigits[data[i] >> 4]);
    s.push_back(kHexDigits[data[i] & 15]);
  }
  return s;
}

std::string hex_encode(const Bytes& data) { return hex_encode(data.data(), data.size()); }
std::string hex_encode(const Digest& d) { return hex_encode(d.data(), d.size()); }

static int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw std::invalid_argument("hex_decode: bad digit");
}

Bytes hex_decode(const std::string& hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("hex_decode: odd length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); i++)
    out[i] = (std::uint8_t)((hex_val(hex[2 * i]) << 4) | hex_val(hex[2 * i + 1]));
  return out;
}

u64 digest_mod(const Digest& d, u64 m) {
  u128 acc = 0;
  for (std::uint8_t b : d) acc = ((acc << 8) | b) % m;
  return (u64)acc;
}

void put_u64_le(Bytes& out, u64 v) {
  for (int i = 0; i < 8; i++) out.push_back((std::uint8_t)(v >> (8 * i)));
}

u64 get_u64_le(const std::uint8_t* p) {
  u64 v = 0;
  for (int i = 0; i < 8; i++) v |= (u64)p[i] << (8 * i);
  return v;
}

}  // namespace mpcnet
