#include "mpcnet/proof.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mpcnet {

Bytes proof_sign_bytes(const ComputationProof& p, int party) {
  Bytes b;
  put_u64_le(b, p.session_id);
  put_u64_le(b, p.modulus);
  Bytes ch = hex_decode(p.circuit_hash);
  b.insert(b.end(), ch.begin(), ch.end());
  put_u64_le(b, p.results.size());
  for (u64 r : p.results) put_u64_le(b, r);
  put_u64_le(b, (u64)party);
  put_u64_le(b, p.sigma.at(party));
  return b;
}

void write_proof_file(const std::string& path, const ComputationProof& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write proof file: " + path);
  out << "session-id: " << p.session_id << '\n';
  out << "modulus: " << p.modulus << '\n';
  out << "circuit-hash: " << p.circuit_hash << '\n';
  out << "results:";
  for (u64 r : p.results) out << ' ' << r;
  out << '\n';
  for (std::size_t i = 0; i < p.sigma.size(); i++) {
    out << "sigma-" << i << ": " << p.sigma[i] << '\n';
    out << "commitments-" << i << ":";
    for (const Digest& d : p.commitments.at(i)) out << ' ' << hex_encode(d);
    out << '\n';
    out << "signature-" << i << ": " << hex_encode(p.signatures.at(i)) << '\n';
  }
}

namespace {

std::runtime_error bad_proof(const std::string& why) {
  return std::runtime_error("malformed proof file: " + why);
}

/// "sigma-3:" -> ("sigma", 3); keys without an index return index -1.
std::pair<std::string, long> split_key(std::string key) {
  if (!key.empty() && key.back() == ':') key.pop_back();
  auto dash = key.find_last_of('-');
  if (dash == std::string::npos || dash + 1 == key.size()) return {key, -1};
  std::string tail = key.substr(dash + 1);
  if (tail.find_first_not_of("0123456789") != std::string::npos) return {key, -1};
  return {key.substr(0, dash), std::stol(tail)};
}

}  // namespace

ComputationProof read_proof_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read proof file: " + path);
  ComputationProof p;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string raw_key;
    ls >> raw_key;
    auto [key, idx] = split_key(raw_key);
    if (key == "session-id") {
      ls >> p.session_id;
    } else if (key == "modulus") {
      ls >> p.modulus;
    } else if (key == "circuit-hash") {
      ls >> p.circuit_hash;
    } else if (key == "results") {
      u64 v;
      while (ls >> v) p.results.push_back(v);
    } else if (key == "sigma") {
      u64 v;
      ls >> v;
      if (!ls || idx != (long)p.sigma.size()) throw bad_proof("sigma lines out of order");
      p.sigma.push_back(v);
    } else if (key == "commitments") {
      if (idx != (long)p.commitments.size()) throw bad_proof("commitment lines out of order");
      std::vector<Digest> ds;
      std::string hexs;
      while (ls >> hexs) {
        Bytes rawd = hex_decode(hexs);
        if (rawd.size() != 32) throw bad_proof("commitment digest length");
        Digest d;
        std::copy(rawd.begin(), rawd.end(), d.begin());
        ds.push_back(d);
      }
      p.commitments.push_back(std::move(ds));
    } else if (key == "signature") {
      std::string hexs;
      ls >> hexs;
      if (!ls || idx != (long)p.signatures.size()) throw bad_proof("signature lines out of order");
      p.signatures.push_back(hex_decode(hexs));
    } else {
      throw bad_proof("unknown key '" + raw_key + "'");
    }
  }
  if (p.sigma.empty() || p.sigma.size() != p.commitments.size() ||
      p.sigma.size() != p.signatures.size())
    throw bad_proof("per-party sections disagree in length");
  return p;
}

void write_roster_file(const std::string& path, const std::vector<PubKey>& keys) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write roster file: " + path);
  for (std::size_t i = 0; i < keys.size(); i++)
    out << "party " << i << ' ' << hex_encode(keys[i].data(), keys[i].size()) << '\n';
}

std::vector<PubKey> read_roster_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read roster file: " + path);
  std::vector<PubKey> keys;
  std::string tag, hexs;
  std::size_t id;
  while (in >> tag >> id >> hexs) {
    if (tag != "party" || id != keys.size())
      throw std::runtime_error("malformed roster file: " + path);
    Bytes raw = hex_decode(hexs);
    if (raw.size() != 32) throw std::runtime_error("roster key length invalid");
    PubKey k;
    std::copy(raw.begin(), raw.end(), k.begin());
    keys.push_back(k);
  }
  return keys;
}

}  // namespace mpcnet
