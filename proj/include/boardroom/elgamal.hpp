#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "boardroom/crypto.hpp"
#include "boardroom/group.hpp"

namespace boardroom {

using PartyId = uint32_t;

// A voter's private key d_i. Never leaves its owner.
struct PrivateShare {
  Scalar d;
  PartyId owner;
};

// g^{d_i}.
struct PublicShare {
  GroupElement value;
  PartyId owner;
};

// e = prod g^{d_i} over every contributor, in contributor order.
struct AggregatePublicKey {
  GroupElement e;
  std::vector<PartyId> contributors;
};

// (g^x, M e^x).
struct Ciphertext {
  GroupElement a;
  GroupElement b;

  Bytes Encode() const;
  static Ciphertext Decode(const GroupPtr& group, ByteReader& in);
  bool operator==(const Ciphertext&) const = default;
};

// What a voter keeps after encrypting: enough to re-derive the ciphertext.
struct EncryptionRecord {
  Ciphertext ciphertext;
  Scalar randomness;
  GroupElement plaintext;
};

// (prod a_k)^{-d_i}, bound to the digest of the product it decrypts.
struct DecryptionShare {
  GroupElement value;
  PartyId owner;
  Digest target;

  Bytes Encode() const;
  static DecryptionShare Decode(const GroupPtr& group, ByteReader& in);
};

std::pair<PrivateShare, PublicShare> Keygen(const GroupPtr& group, Rng& rng, PartyId owner);
// Deterministic keygen from a chosen d (tests and key files).
std::pair<PrivateShare, PublicShare> KeygenFrom(const Scalar& d, PartyId owner);

// Throws std::invalid_argument on an empty list or duplicate owners, and
// GroupMismatch on mixed parameters.
AggregatePublicKey Aggregate(std::span<const PublicShare> shares);

EncryptionRecord Encrypt(const GroupElement& m, const AggregatePublicKey& key, Rng& rng);
EncryptionRecord EncryptWith(const GroupElement& m, const AggregatePublicKey& key, const Scalar& x);
// Re-encrypts (m, x) and compares against the published ciphertext.
bool MatchesEncryption(const Ciphertext& published, const GroupElement& m, const Scalar& x,
                       const AggregatePublicKey& key);

GroupElement ProductOf(std::span<const GroupElement> values);

// Digest binding a product of ciphertext a-components to an election context.
Digest ProductTarget(std::span<const GroupElement> a_values, std::string_view context);

// Throws std::invalid_argument on an empty list.
DecryptionShare ShareForProduct(std::span<const GroupElement> a_values, const PrivateShare& key,
                                std::string_view context);

// b_product * prod shares, requiring exactly one share per contributor of
// key, every one bound to expected_target.
GroupElement Combine(const GroupElement& b_product, std::span<const DecryptionShare> shares,
                     const AggregatePublicKey& key, const Digest& expected_target);

// b_product * prod shares with no completeness or binding checks.
GroupElement CombineUnchecked(const GroupElement& b_product, std::span<const DecryptionShare> shares);

}  // namespace boardroom
