#include "boardroom/elgamal.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace boardroom {

Bytes Ciphertext::Encode() const {
  ByteWriter w;
  w.Field(a.Encode()).Field(b.Encode());
  return std::move(w).Take();
}

Ciphertext Ciphertext::Decode(const GroupPtr& group, ByteReader& in) {
  GroupElement a = GroupElement::Decode(group, in.Field());
  GroupElement b = GroupElement::Decode(group, in.Field());
  return Ciphertext{std::move(a), std::move(b)};
}

Bytes DecryptionShare::Encode() const {
  ByteWriter w;
  w.Field(value.Encode()).U32(owner).Field(target);
  return std::move(w).Take();
}

DecryptionShare DecryptionShare::Decode(const GroupPtr& group, ByteReader& in) {
  GroupElement value = GroupElement::Decode(group, in.Field());
  const PartyId owner = in.U32();
  const Bytes target = in.Field();
  if (target.size() != 32) {
    throw DecodeError("share target must be 32 bytes");
  }
  DecryptionShare share{std::move(value), owner, {}};
  std::copy(target.begin(), target.end(), share.target.begin());
  return share;
}

std::pair<PrivateShare, PublicShare> KeygenFrom(const Scalar& d, PartyId owner) {
  GroupElement pub = GeneratorPow(d);
  return {PrivateShare{d, owner}, PublicShare{std::move(pub), owner}};
}

std::pair<PrivateShare, PublicShare> Keygen(const GroupPtr& group, Rng& rng, PartyId owner) {
  return KeygenFrom(RandomScalar(group, rng), owner);
}

AggregatePublicKey Aggregate(std::span<const PublicShare> shares) {
  if (shares.empty()) {
    throw std::invalid_argument("aggregate requires at least one public share");
  }
  std::set<PartyId> seen;
  AggregatePublicKey key{GroupElement::One(shares.front().value.group()), {}};
  for (const PublicShare& share : shares) {
    if (!seen.insert(share.owner).second) {
      throw std::invalid_argument("duplicate public share owner " + std::to_string(share.owner));
    }
    key.e = ModMul(key.e, share.value);
    key.contributors.push_back(share.owner);
  }
  return key;
}

EncryptionRecord EncryptWith(const GroupElement& m, const AggregatePublicKey& key, const Scalar& x) {
  GroupElement a = GeneratorPow(x);
  GroupElement b = ModMul(m, ModExp(key.e, x));
  return EncryptionRecord{Ciphertext{std::move(a), std::move(b)}, x, m};
}

EncryptionRecord Encrypt(const GroupElement& m, const AggregatePublicKey& key, Rng& rng) {
  return EncryptWith(m, key, RandomScalar(m.group(), rng));
}

bool MatchesEncryption(const Ciphertext& published, const GroupElement& m, const Scalar& x,
                       const AggregatePublicKey& key) {
  return EncryptWith(m, key, x).ciphertext == published;
}

GroupElement ProductOf(std::span<const GroupElement> values) {
  if (values.empty()) {
    throw std::invalid_argument("product of an empty list");
  }
  GroupElement acc = values.front();
  for (size_t i = 1; i < values.size(); ++i) {
    acc = ModMul(acc, values[i]);
  }
  return acc;
}

Digest ProductTarget(std::span<const GroupElement> a_values, std::string_view context) {
  const GroupElement product = ProductOf(a_values);
  return Sha256Hasher()
      .Update(std::string_view("boardroom/share-target/v1"))
      .Update(ByteWriter().Str(context).bytes())
      .Update(product.Encode())
      .Final();
}

DecryptionShare ShareForProduct(std::span<const GroupElement> a_values, const PrivateShare& key,
                                std::string_view context) {
  if (a_values.empty()) {
    throw std::invalid_argument("decryption share needs at least one ciphertext");
  }
  const GroupElement product = ProductOf(a_values);
  return DecryptionShare{ModExp(product, key.d.Negate()), key.owner, ProductTarget(a_values, context)};
}

GroupElement CombineUnchecked(const GroupElement& b_product, std::span<const DecryptionShare> shares) {
  GroupElement acc = b_product;
  for (const DecryptionShare& share : shares) {
    acc = ModMul(acc, share.value);
  }
  return acc;
}

GroupElement Combine(const GroupElement& b_product, std::span<const DecryptionShare> shares,
                     const AggregatePublicKey& key, const Digest& expected_target) {
  std::set<PartyId> seen;
  for (const DecryptionShare& share : shares) {
    if (!DigestEquals(share.target, expected_target)) {
      throw std::invalid_argument("decryption share from party " + std::to_string(share.owner) +
                                  " binds a different product");
    }
    if (std::find(key.contributors.begin(), key.contributors.end(), share.owner) ==
        key.contributors.end()) {
      throw std::invalid_argument("decryption share from non-contributor " +
                                  std::to_string(share.owner));
    }
    if (!seen.insert(share.owner).second) {
      throw std::invalid_argument("duplicate decryption share from party " +
                                  std::to_string(share.owner));
    }
  }
  if (seen.size() != key.contributors.size()) {
    throw std::invalid_argument("missing decryption shares: have " + std::to_string(seen.size()) +
                                " of " + std::to_string(key.contributors.size()));
  }
  return CombineUnchecked(b_product, shares);
}

}  // namespace boardroom
