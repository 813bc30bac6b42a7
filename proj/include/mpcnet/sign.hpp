#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mpcnet/hash.hpp"

namespace mpcnet {

/// Ed25519 keypair. Keygen is deterministic from a 32-byte seed and signing
/// is deterministic in the message, so transcripts replay bit-identically.
struct SigKeyPair {
  std::array<std::uint8_t, 32> secret;  // raw seed
  std::array<std::uint8_t, 32> public_key;
};

SigKeyPair sig_keygen(const std::array<std::uint8_t, 32>& seed);
std::vector<std::uint8_t> sig_sign(const SigKeyPair& kp, const Bytes& msg);
bool sig_verify(const std::array<std::uint8_t, 32>& public_key, const Bytes& msg,
                const std::vector<std::uint8_t>& sig);

}  // namespace mpcnet
