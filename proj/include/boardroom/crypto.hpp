#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "boardroom/bytes.hpp"

namespace boardroom {

using Digest = std::array<uint8_t, 32>;

Digest Sha256(ByteSpan data);
Digest HmacSha256(ByteSpan key, ByteSpan data);
bool DigestEquals(const Digest& a, const Digest& b);

class Sha256Hasher {
 public:
  Sha256Hasher();
  Sha256Hasher& Update(ByteSpan data);
  Sha256Hasher& Update(std::string_view s) { return Update(AsBytes(s)); }
  Digest Final();

 private:
  alignas(64) std::array<uint8_t, 128> state_;
};

// ChaCha20-backed deterministic generator, or the OS generator.
//
// Seeded streams are reproducible across runs and platforms. Fork() derives a
// child from the parent's key and a label only, so children do not depend on
// how much of the parent stream has been consumed.
class Rng {
 public:
  static Rng FromSeed(uint64_t seed);
  static Rng FromSeedBytes(ByteSpan seed);
  static Rng System();

  void Fill(std::span<uint8_t> out);
  uint64_t Next64();
  // Uniform in [0, bound). bound must be nonzero.
  uint64_t Below(uint64_t bound);
  Rng Fork(std::string_view label) const;

  bool deterministic() const { return !system_; }

 private:
  Rng() = default;
  void Refill();

  bool system_ = false;
  std::array<uint8_t, 32> key_{};
  uint64_t block_ = 0;
  std::array<uint8_t, 64> buffer_{};
  size_t pos_ = 64;
};

using Signature = std::array<uint8_t, 64>;

struct VerifyKey {
  std::array<uint8_t, 32> bytes{};
  bool operator==(const VerifyKey&) const = default;
};

// Ed25519 signing key.
class SigningKey {
 public:
  static SigningKey FromSeed(std::span<const uint8_t, 32> seed);
  static SigningKey Generate(Rng& rng);

  Signature Sign(ByteSpan message) const;
  const VerifyKey& verify_key() const { return verify_key_; }
  const std::array<uint8_t, 32>& seed() const { return seed_; }

 private:
  std::array<uint8_t, 32> seed_{};
  std::array<uint8_t, 64> secret_{};
  VerifyKey verify_key_;
};

bool VerifySignature(const VerifyKey& key, ByteSpan message, const Signature& sig);

}  // namespace boardroom
