#include "boardroom/group.hpp"

#include <algorithm>
#include <array>

namespace boardroom {
namespace {

thread_local uint64_t g_exponentiations = 0;

constexpr std::string_view kToyModulusHex = "fffffffffffffa43";
constexpr std::string_view kModp2048Hex =
    "ffffffffffffffffc90fdaa22168c234c4c6628b80dc1cd129024e088a67cc74"
    "020bbea63b139b22514a08798e3404ddef9519b3cd3a431b302b0a6df25f1437"
    "4fe1356d6d51c245e485b576625e7ec6f44c42e9a637ed6b0bff5cb6f406b7ed"
    "ee386bfb5a899fa5ae9f24117c4b1fe649286651ece45b3dc2007cb8a163bf05"
    "98da48361c55d39a69163fa8fd24cf5f83655d23dca3ad961c62f356208552bb"
    "9ed529077096966d670c354e4abc9804f1746c08ca18217c32905e462e36ce3b"
    "e39e772c180e86039b2783a2ec07a28fb5c55df06f4c52c9de2bcbf695581718"
    "3995497cea956ae515d2261898fa051015728e5a8aacaa68ffffffffffffffff";

void RequireSameGroup(const GroupPtr& a, const GroupPtr& b) {
  if (!a->SameAs(*b)) {
    throw GroupMismatch();
  }
}

Bytes EncodeFixed(const mpz_class& v, size_t width) {
  Bytes out(width, 0);
  size_t count = 0;
  const size_t needed = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  if (needed > width) {
    throw std::invalid_argument("integer exceeds encoding width");
  }
  if (v != 0) {
    mpz_export(out.data() + (width - needed), &count, 1, 1, 1, 0, v.get_mpz_t());
  }
  return out;
}

mpz_class DecodeFixed(ByteSpan bytes) {
  mpz_class v;
  if (!bytes.empty()) {
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return v;
}

// Small primes for sieving safe-prime candidates.
const std::vector<unsigned long>& SmallPrimes() {
  static const std::vector<unsigned long> primes = [] {
    std::vector<unsigned long> out;
    for (unsigned long p = 3; p < 2000; p += 2) {
      bool prime = true;
      for (unsigned long d = 3; d * d <= p; d += 2) {
        if (p % d == 0) {
          prime = false;
          break;
        }
      }
      if (prime) out.push_back(p);
    }
    return out;
  }();
  return primes;
}

// Rejects r when r or 2r + 1 has a small factor.
bool PassesSieve(const mpz_class& r) {
  for (unsigned long p : SmallPrimes()) {
    const unsigned long rem = mpz_fdiv_ui(r.get_mpz_t(), p);
    if ((rem == 0 && r != p) || (2 * rem + 1) % p == 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

GroupParams::GroupParams(mpz_class modulus, mpz_class generator)
    : modulus_(std::move(modulus)), generator_(std::move(generator)) {
  if (modulus_ < 3) {
    throw std::invalid_argument("modulus must be at least 3");
  }
  order_ = modulus_ - 1;
  bit_length_ = mpz_sizeinbase(modulus_.get_mpz_t(), 2);
}

GroupPtr MakeGroup(mpz_class modulus, mpz_class generator) {
  return std::make_shared<const GroupParams>(std::move(modulus), std::move(generator));
}

GroupPtr ToyGroup() {
  static const GroupPtr group = MakeGroup(FromHexString(kToyModulusHex), 4);
  return group;
}

GroupPtr Modp2048Group() {
  static const GroupPtr group = MakeGroup(FromHexString(kModp2048Hex), 2);
  return group;
}

GroupPtr PresetGroup(std::string_view name) {
  if (name == "toy64") return ToyGroup();
  if (name == "modp2048") return Modp2048Group();
  throw std::invalid_argument("unknown group preset: " + std::string(name));
}

std::string PresetName(const GroupParams& params) {
  if (params.SameAs(*ToyGroup())) return "toy64";
  if (params.SameAs(*Modp2048Group())) return "modp2048";
  return "custom";
}

GroupElement GroupElement::FromInteger(GroupPtr group, mpz_class value) {
  if (value < 1 || value >= group->modulus()) {
    throw std::invalid_argument("group element out of range [1, q-1]");
  }
  return GroupElement(std::move(group), std::move(value));
}

GroupElement GroupElement::One(GroupPtr group) { return GroupElement(std::move(group), 1); }

GroupElement GroupElement::Generator(GroupPtr group) {
  mpz_class g = group->generator();
  return GroupElement(std::move(group), std::move(g));
}

GroupElement GroupElement::Decode(GroupPtr group, ByteSpan bytes) {
  if (bytes.size() != group->element_bytes()) {
    throw DecodeError("group element has wrong encoded width");
  }
  mpz_class v = DecodeFixed(bytes);
  if (v < 1 || v >= group->modulus()) {
    throw DecodeError("decoded group element out of range");
  }
  return GroupElement(std::move(group), std::move(v));
}

Bytes GroupElement::Encode() const { return EncodeFixed(value_, group_->element_bytes()); }

Scalar Scalar::FromInteger(GroupPtr group, mpz_class value) {
  if (value < 0 || value >= group->order()) {
    throw std::invalid_argument("scalar out of range [0, q-2]");
  }
  return Scalar(std::move(group), std::move(value));
}

Scalar Scalar::Reduce(GroupPtr group, const mpz_class& value) {
  mpz_class r;
  mpz_fdiv_r(r.get_mpz_t(), value.get_mpz_t(), group->order().get_mpz_t());
  return Scalar(std::move(group), std::move(r));
}

Scalar Scalar::Decode(GroupPtr group, ByteSpan bytes) {
  if (bytes.size() != group->element_bytes()) {
    throw DecodeError("scalar has wrong encoded width");
  }
  mpz_class v = DecodeFixed(bytes);
  if (v >= group->order()) {
    throw DecodeError("decoded scalar out of range");
  }
  return Scalar(std::move(group), std::move(v));
}

Bytes Scalar::Encode() const { return EncodeFixed(value_, group_->element_bytes()); }

Scalar Scalar::Negate() const { return Reduce(group_, -value_); }

Scalar Scalar::operator+(const Scalar& other) const {
  RequireSameGroup(group_, other.group_);
  return Reduce(group_, value_ + other.value_);
}

Scalar Scalar::operator*(const Scalar& other) const {
  RequireSameGroup(group_, other.group_);
  return Reduce(group_, value_ * other.value_);
}

GroupElement ModExp(const GroupElement& base, const Scalar& exp) {
  RequireSameGroup(base.group(), exp.group());
  ++g_exponentiations;
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.value().get_mpz_t(), exp.value().get_mpz_t(),
           base.group()->modulus().get_mpz_t());
  return GroupElement(base.group(), std::move(out));
}

GroupElement ModMul(const GroupElement& a, const GroupElement& b) {
  RequireSameGroup(a.group(), b.group());
  mpz_class out = a.value() * b.value();
  mpz_mod(out.get_mpz_t(), out.get_mpz_t(), a.group()->modulus().get_mpz_t());
  return GroupElement(a.group(), std::move(out));
}

GroupElement ModInv(const GroupElement& a) {
  mpz_class out;
  if (mpz_invert(out.get_mpz_t(), a.value().get_mpz_t(), a.group()->modulus().get_mpz_t()) == 0) {
    throw std::invalid_argument("element has no inverse");
  }
  return GroupElement(a.group(), std::move(out));
}

GroupElement GeneratorPow(const Scalar& exp) {
  return ModExp(GroupElement::Generator(exp.group()), exp);
}

mpz_class RandomBelow(Rng& rng, const mpz_class& bound) {
  if (bound <= 0) {
    throw std::invalid_argument("RandomBelow requires a positive bound");
  }
  const size_t bits = mpz_sizeinbase(bound.get_mpz_t(), 2);
  const size_t nbytes = (bits + 7) / 8;
  const unsigned excess = static_cast<unsigned>(nbytes * 8 - bits);
  Bytes buf(nbytes);
  for (;;) {
    rng.Fill(buf);
    buf[0] &= static_cast<uint8_t>(0xFF >> excess);
    mpz_class v = DecodeFixed(buf);
    if (v < bound) {
      return v;
    }
  }
}

Scalar RandomScalar(const GroupPtr& group, Rng& rng) {
  return Scalar::FromInteger(group, RandomBelow(rng, group->order()));
}

GroupElement RandomElement(const GroupPtr& group, Rng& rng) {
  return GroupElement::FromInteger(group, RandomBelow(rng, group->order()) + 1);
}

uint64_t ExponentiationCount() { return g_exponentiations; }

bool IsProbablePrime(const mpz_class& n) { return mpz_probab_prime_p(n.get_mpz_t(), 40) > 0; }

GroupPtr GenerateParams(unsigned bit_length, Rng& rng, std::chrono::milliseconds budget) {
  if (bit_length < kMinGroupBits) {
    throw std::invalid_argument("bit length below the " + std::to_string(kMinGroupBits) +
                                "-bit floor");
  }
  const auto deadline = std::chrono::steady_clock::now() + budget;
  const mpz_class top = mpz_class(1) << (bit_length - 2);
  for (uint64_t attempt = 0;; ++attempt) {
    if ((attempt & 0xFF) == 0 && std::chrono::steady_clock::now() > deadline) {
      throw ParamSearchTimeout("safe-prime search exceeded its time budget at " +
                               std::to_string(bit_length) + " bits");
    }
    // r has bit_length - 1 bits so q = 2r + 1 has exactly bit_length bits.
    mpz_class r = RandomBelow(rng, top) | top | 1;
    if (!PassesSieve(r)) continue;
    if (mpz_probab_prime_p(r.get_mpz_t(), 1) == 0) continue;
    mpz_class q = 2 * r + 1;
    if (!IsProbablePrime(q) || !IsProbablePrime(r)) continue;
    // 4 = 2^2 is a quadratic residue different from 1, so it generates the
    // order-r subgroup.
    return MakeGroup(std::move(q), 4);
  }
}

std::vector<std::string> ValidateParams(const GroupParams& params) {
  std::vector<std::string> errors;
  const mpz_class& q = params.modulus();
  const mpz_class& g = params.generator();
  const bool q_prime = IsProbablePrime(q);
  if (!q_prime) {
    errors.emplace_back("modulus not prime");
  }
  const mpz_class r = (q - 1) / 2;
  if (q % 2 == 0 || !IsProbablePrime(r)) {
    errors.emplace_back("modulus not a safe prime");
  }
  if (params.bit_length() < kMinGroupBits) {
    errors.emplace_back("modulus below minimum bit length");
  }
  if (g == 1) {
    errors.emplace_back("trivial generator");
  } else if (g < 2 || g > q - 1) {
    errors.emplace_back("generator out of range");
  } else {
    mpz_class check;
    mpz_powm(check.get_mpz_t(), g.get_mpz_t(), r.get_mpz_t(), q.get_mpz_t());
    if (check != 1) {
      errors.emplace_back("generator outside the order-r subgroup");
    }
  }
  return errors;
}

std::string ToHexString(const mpz_class& v) { return v.get_str(16); }

mpz_class FromHexString(std::string_view hex) {
  if (hex.empty() || !std::all_of(hex.begin(), hex.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
      })) {
    throw DecodeError("invalid hex integer");
  }
  return mpz_class(std::string(hex), 16);
}

}  // namespace boardroom
