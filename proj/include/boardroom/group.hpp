#pragma once

#include <gmpxx.h>

#include <chrono>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "boardroom/bytes.hpp"
#include "boardroom/crypto.hpp"

namespace boardroom {

// Multiplicative group Z_q^* with q = 2r + 1 a safe prime and g generating the
// order-r subgroup of quadratic residues. Exponents are taken modulo q - 1.
//
// Construction does not validate; call ValidateParams() on untrusted input.
class GroupParams {
 public:
  GroupParams(mpz_class modulus, mpz_class generator);

  const mpz_class& modulus() const { return modulus_; }
  const mpz_class& generator() const { return generator_; }
  // q - 1, the exponent modulus.
  const mpz_class& order() const { return order_; }
  size_t bit_length() const { return bit_length_; }
  // Canonical encoding width: ceil(bit_length / 8).
  size_t element_bytes() const { return (bit_length_ + 7) / 8; }

  bool SameAs(const GroupParams& other) const {
    return this == &other || (modulus_ == other.modulus_ && generator_ == other.generator_);
  }

 private:
  mpz_class modulus_;
  mpz_class generator_;
  mpz_class order_;
  size_t bit_length_;
};

using GroupPtr = std::shared_ptr<const GroupParams>;

class GroupMismatch : public std::invalid_argument {
 public:
  GroupMismatch() : std::invalid_argument("operands belong to different group parameters") {}
};

GroupPtr MakeGroup(mpz_class modulus, mpz_class generator);
// 64-bit safe-prime group for tests and desk simulation.
GroupPtr ToyGroup();
// RFC 3526 2048-bit MODP safe prime, generator 2.
GroupPtr Modp2048Group();
// "toy64" or "modp2048"; throws std::invalid_argument otherwise.
GroupPtr PresetGroup(std::string_view name);
// Preset name for a group equal to one of the presets, else "custom".
std::string PresetName(const GroupParams& params);

class Scalar;

class GroupElement {
 public:
  // Throws std::invalid_argument unless 1 <= value <= q - 1.
  static GroupElement FromInteger(GroupPtr group, mpz_class value);
  static GroupElement One(GroupPtr group);
  static GroupElement Generator(GroupPtr group);
  // Fixed-width big-endian bytes; throws DecodeError on bad width or range.
  static GroupElement Decode(GroupPtr group, ByteSpan bytes);

  const mpz_class& value() const { return value_; }
  const GroupPtr& group() const { return group_; }
  Bytes Encode() const;
  bool IsOne() const { return value_ == 1; }

  bool operator==(const GroupElement& other) const {
    return value_ == other.value_ && group_->SameAs(*other.group_);
  }

 private:
  GroupElement(GroupPtr group, mpz_class value) : group_(std::move(group)), value_(std::move(value)) {}
  friend GroupElement ModExp(const GroupElement&, const Scalar&);
  friend GroupElement ModMul(const GroupElement&, const GroupElement&);
  friend GroupElement ModInv(const GroupElement&);

  GroupPtr group_;
  mpz_class value_;
};

class Scalar {
 public:
  // Throws std::invalid_argument unless 0 <= value <= q - 2.
  static Scalar FromInteger(GroupPtr group, mpz_class value);
  // Reduces any integer (including negatives) modulo q - 1.
  static Scalar Reduce(GroupPtr group, const mpz_class& value);
  static Scalar Zero(GroupPtr group) { return Scalar(std::move(group), 0); }
  static Scalar Decode(GroupPtr group, ByteSpan bytes);

  const mpz_class& value() const { return value_; }
  const GroupPtr& group() const { return group_; }
  Bytes Encode() const;

  Scalar Negate() const;
  Scalar operator+(const Scalar& other) const;
  Scalar operator*(const Scalar& other) const;
  bool operator==(const Scalar& other) const {
    return value_ == other.value_ && group_->SameAs(*other.group_);
  }

 private:
  Scalar(GroupPtr group, mpz_class value) : group_(std::move(group)), value_(std::move(value)) {}

  GroupPtr group_;
  mpz_class value_;
};

// base^exp mod q. Counts one exponentiation.
GroupElement ModExp(const GroupElement& base, const Scalar& exp);
GroupElement ModMul(const GroupElement& a, const GroupElement& b);
GroupElement ModInv(const GroupElement& a);
inline GroupElement ModDiv(const GroupElement& a, const GroupElement& b) { return ModMul(a, ModInv(b)); }
// g^exp. Counts one exponentiation.
GroupElement GeneratorPow(const Scalar& exp);

// Uniform in [0, bound).
mpz_class RandomBelow(Rng& rng, const mpz_class& bound);
// Uniform in [0, q - 2].
Scalar RandomScalar(const GroupPtr& group, Rng& rng);
// Uniform in [1, q - 1].
GroupElement RandomElement(const GroupPtr& group, Rng& rng);

// Exponentiations performed on the calling thread since it started.
uint64_t ExponentiationCount();

// Adds the number of exponentiations performed during its lifetime to *sink.
class ExpMeter {
 public:
  explicit ExpMeter(uint64_t* sink) : sink_(sink), start_(ExponentiationCount()) {}
  ~ExpMeter() { *sink_ += ExponentiationCount() - start_; }
  ExpMeter(const ExpMeter&) = delete;
  ExpMeter& operator=(const ExpMeter&) = delete;

 private:
  uint64_t* sink_;
  uint64_t start_;
};

// Miller-Rabin with 40 rounds (error < 2^-80).
bool IsProbablePrime(const mpz_class& n);

class ParamSearchTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr unsigned kMinGroupBits = 32;

// Fresh safe-prime group of exactly bit_length bits. Throws
// std::invalid_argument below kMinGroupBits and ParamSearchTimeout when the
// search exceeds budget.
GroupPtr GenerateParams(unsigned bit_length, Rng& rng,
                        std::chrono::milliseconds budget = std::chrono::seconds(60));

// Every violated invariant, by name. Empty means valid.
std::vector<std::string> ValidateParams(const GroupParams& params);

std::string ToHexString(const mpz_class& v);
mpz_class FromHexString(std::string_view hex);

}  // namespace boardroom
