#pragma once

#include <array>
#include <string>
#include <vector>

#include "mpcnet/hash.hpp"

namespace mpcnet {

using PubKey = std::array<std::uint8_t, 32>;

/// Verifiable record of one session's outputs: result values plus each
/// party's MAC residue sigma_i and a signature binding (session, results,
/// sigma_i). A verifier needs n signature checks and one sum; nothing about
/// the circuit itself.
struct ComputationProof {
  u64 session_id = 0;
  u64 modulus = 0;
  std::string circuit_hash;                      // hex digest of the circuit text
  std::vector<u64> results;                      // opened output values
  std::vector<u64> sigma;                        // per party
  std::vector<std::vector<Digest>> commitments;  // per party, one per output wire
  std::vector<Bytes> signatures;                 // per party, 64 bytes
};

/// Message bytes party i signs: every field the verifier relies on.
Bytes proof_sign_bytes(const ComputationProof& p, int party);

void write_proof_file(const std::string& path, const ComputationProof& p);
ComputationProof read_proof_file(const std::string& path);

/// Roster file: line-oriented `party <id> <ed25519-pubkey-hex>`.
void write_roster_file(const std::string& path, const std::vector<PubKey>& keys);
std::vector<PubKey> read_roster_file(const std::string& path);

}  // namespace mpcnet
