#include "boardroom/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace boardroom {
namespace {

void EnsureSodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) {
    throw std::runtime_error("libsodium initialization failed");
  }
}

crypto_hash_sha256_state* AsState(std::array<uint8_t, 128>& raw) {
  static_assert(sizeof(crypto_hash_sha256_state) <= 128);
  return reinterpret_cast<crypto_hash_sha256_state*>(raw.data());
}

}  // namespace

Digest Sha256(ByteSpan data) {
  EnsureSodium();
  Digest out;
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Digest HmacSha256(ByteSpan key, ByteSpan data) {
  EnsureSodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  Digest out;
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

bool DigestEquals(const Digest& a, const Digest& b) {
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

Sha256Hasher::Sha256Hasher() {
  EnsureSodium();
  crypto_hash_sha256_init(AsState(state_));
}

Sha256Hasher& Sha256Hasher::Update(ByteSpan data) {
  crypto_hash_sha256_update(AsState(state_), data.data(), data.size());
  return *this;
}

Digest Sha256Hasher::Final() {
  Digest out;
  crypto_hash_sha256_final(AsState(state_), out.data());
  return out;
}

Rng Rng::FromSeed(uint64_t seed) {
  ByteWriter w;
  w.Str("boardroom/rng/u64").U64(seed);
  return FromSeedBytes(w.bytes());
}

Rng Rng::FromSeedBytes(ByteSpan seed) {
  Rng rng;
  rng.key_ = Sha256(seed);
  return rng;
}

Rng Rng::System() {
  EnsureSodium();
  Rng rng;
  rng.system_ = true;
  return rng;
}

void Rng::Refill() {
  static_assert(crypto_stream_chacha20_KEYBYTES == 32);
  std::array<uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
  buffer_.fill(0);
  crypto_stream_chacha20_xor_ic(buffer_.data(), buffer_.data(), buffer_.size(), nonce.data(),
                                block_++, key_.data());
  pos_ = 0;
}

void Rng::Fill(std::span<uint8_t> out) {
  if (system_) {
    randombytes_buf(out.data(), out.size());
    return;
  }
  size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) {
      Refill();
    }
    const size_t take = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, take);
    pos_ += take;
    done += take;
  }
}

uint64_t Rng::Next64() {
  std::array<uint8_t, 8> b;
  Fill(b);
  uint64_t v = 0;
  for (uint8_t byte : b) {
    v = (v << 8) | byte;
  }
  return v;
}

uint64_t Rng::Below(uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("Rng::Below requires a nonzero bound");
  }
  // Rejection sampling over the largest multiple of bound.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    const uint64_t v = Next64();
    if (v < limit) {
      return v % bound;
    }
  }
}

Rng Rng::Fork(std::string_view label) const {
  if (system_) {
    return System();
  }
  Rng child;
  child.key_ = Sha256Hasher().Update(std::string_view("boardroom/rng/fork")).Update(key_).Update(label).Final();
  return child;
}

SigningKey SigningKey::FromSeed(std::span<const uint8_t, 32> seed) {
  EnsureSodium();
  SigningKey key;
  std::memcpy(key.seed_.data(), seed.data(), seed.size());
  crypto_sign_seed_keypair(key.verify_key_.bytes.data(), key.secret_.data(), key.seed_.data());
  return key;
}

SigningKey SigningKey::Generate(Rng& rng) {
  std::array<uint8_t, 32> seed;
  rng.Fill(seed);
  return FromSeed(seed);
}

Signature SigningKey::Sign(ByteSpan message) const {
  Signature sig;
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
  return sig;
}

bool VerifySignature(const VerifyKey& key, ByteSpan message, const Signature& sig) {
  EnsureSodium();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(),
                                     key.bytes.data()) == 0;
}

}  // namespace boardroom
