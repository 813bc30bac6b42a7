#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mpcnet/field.hpp"

namespace mpcnet {

using Digest = std::array<std::uint8_t, 32>;
using Bytes = std::vector<std::uint8_t>;

Digest sha3_256(const std::uint8_t* data, std::size_t len);
Digest sha3_256(const Bytes& data);
Digest sha3_256(const std::string& data);

std::string hex_encode(const std::uint8_t* data, std::size_t len);
std::string hex_encode(const Bytes& data);
std::string hex_encode(const Digest& d);
Bytes hex_decode(const std::string& hex);  // throws on odd length / bad digit

/// 256-bit digest interpreted big-endian, reduced mod m.
u64 digest_mod(const Digest& d, u64 m);

void put_u64_le(Bytes& out, u64 v);
u64 get_u64_le(const std::uint8_t* p);

}  // namespace mpcnet
