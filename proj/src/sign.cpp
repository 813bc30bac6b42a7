#include "mpcnet/sign.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace mpcnet {

SigKeyPair sig_keygen(const std::array<std::uint8_t, 32>& seed) {
  SigKeyPair kp;
  kp.secret = seed;
  EVP_PKEY* sk =
      EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
  if (!sk) throw std::runtime_error("ed25519 keygen failed");
  std::size_t publen = kp.public_key.size();
  if (EVP_PKEY_get_raw_public_key(sk, kp.public_key.data(), &publen) != 1 || publen != 32) {
    EVP_PKEY_free(sk);
    throw std::runtime_error("ed25519 pubkey derivation failed");
  }
  EVP_PKEY_free(sk);
  return kp;
}

std::vector<std::uint8_t> sig_sign(const SigKeyPair& kp, const Bytes& msg) {
  EVP_PKEY* sk = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, kp.secret.data(),
                                              kp.secret.size());
  if (!sk) throw std::runtime_error("ed25519 load failed");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  std::vector<std::uint8_t> sig(64);
  std::size_t siglen = sig.size();
  if (!ctx || EVP_DigestSignInit(ctx, nullptr, nullptr, nullptr, sk) != 1 ||
      EVP_DigestSign(ctx, sig.data(), &siglen, msg.data(), msg.size()) != 1 || siglen != 64) {
    EVP_MD_CTX_free(ctx);
    EVP_PKEY_free(sk);
    throw std::runtime_error("ed25519 sign failed");
  }
  EVP_MD_CTX_free(ctx);
  EVP_PKEY_free(sk);
  return sig;
}

bool sig_verify(const std::array<std::uint8_t, 32>& public_key, const Bytes& msg,
                const std::vector<std::uint8_t>& sig) {
  if (sig.size() != 64) return false;
  EVP_PKEY* pk =
      EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size());
  if (!pk) return false;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  bool ok = ctx && EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, pk) == 1 &&
            EVP_DigestVerify(ctx, sig.data(), sig.size(), msg.data(), msg.size()) == 1;
  EVP_MD_CTX_free(ctx);
  EVP_PKEY_free(pk);
  return ok;
}

}  // namespace mpcnet
