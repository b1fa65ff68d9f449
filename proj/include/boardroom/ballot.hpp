#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "boardroom/elgamal.hpp"
#include "boardroom/group.hpp"

namespace boardroom {

// lambda * m distinct primes, ascending.
struct PrimeTable {
  uint32_t lambda = 0;
  uint32_t candidates = 0;
  std::vector<uint64_t> primes;

  uint64_t max_prime() const { return primes.empty() ? 0 : primes.back(); }
  size_t size() const { return primes.size(); }
  // Position of p in the table, or nullopt.
  std::optional<size_t> IndexOf(uint64_t p) const;
};

// Raised when b^n >= q. min_modulus_bits is the smallest modulus size that
// would accept the table.
class PrimeConstraintError : public std::invalid_argument {
 public:
  PrimeConstraintError(const std::string& what, size_t min_modulus_bits)
      : std::invalid_argument(what), min_modulus_bits_(min_modulus_bits) {}
  size_t min_modulus_bits() const { return min_modulus_bits_; }

 private:
  size_t min_modulus_bits_;
};

std::vector<uint64_t> PrimesBelow(uint64_t limit);

// The lambda * m smallest primes, rejected unless max^n < q.
PrimeTable SelectPrimes(uint32_t lambda, uint32_t candidates, uint32_t voters, const GroupParams& params);
// Any admissible caller-supplied set (distinct primes, right count, max^n < q).
PrimeTable TableFromPrimes(uint32_t lambda, uint32_t candidates, uint32_t voters,
                           std::vector<uint64_t> primes, const GroupParams& params);

struct LambdaCheck {
  bool ok;
  std::string message;
};

// Warns when lambda * m <= n, unless the distributor is a trusted authority.
LambdaCheck CheckLambdaPolicy(uint32_t lambda, uint32_t candidates, uint32_t voters, bool trusted_authority);

// Contiguous lambda-sized index blocks: index i belongs to candidate i / lambda.
struct CandidateBlockMap {
  uint32_t lambda;
  uint32_t candidates;

  uint32_t CandidateOf(uint32_t index) const;
  uint32_t FirstIndex(uint32_t candidate) const;
  uint32_t size() const { return lambda * candidates; }
};

// index -> prime; a permutation of the table.
struct PrimeAssignment {
  std::vector<uint64_t> primes;

  // Canonical commitment payload: assignment order, then lambda, m, election id.
  Bytes Serialize(uint32_t lambda, uint32_t candidates, std::string_view election_id) const;
  static PrimeAssignment Parse(ByteSpan payload, uint32_t* lambda, uint32_t* candidates,
                               std::string* election_id);
};

PrimeAssignment RandomAssignment(const PrimeTable& table, Rng& rng);
// True when assignment is a permutation of the table.
bool IsPermutationOf(const PrimeAssignment& assignment, const PrimeTable& table);

struct Mask {
  Scalar s;
  GroupElement g_s;

  static Mask Draw(const GroupPtr& group, Rng& rng);
  static Mask FromScalar(const Scalar& s);
  // Commitment payload: canonical s, then election id.
  Bytes Serialize(std::string_view election_id) const;
};

using MaskedPrimeList = std::vector<GroupElement>;

MaskedPrimeList MaskAll(const PrimeAssignment& assignment, const Mask& mask);

// g^{-k s} for k masked votes (k = n - 1 with a voting distributor).
GroupElement UnmaskFactor(uint32_t masked_votes, const Mask& mask);

struct TallyProduct {
  GroupElement value;
};

// (prod b) * unmask * (prod shares). Every share must bind the product of the
// votes' a-components under `context`.
TallyProduct ComputeProduct(std::span<const Ciphertext> votes, std::span<const DecryptionShare> shares,
                            const GroupElement& unmask, std::string_view context);

// Exponents indexed by table position.
struct ExponentVector {
  std::vector<int64_t> exponents;
  mpz_class residue;
};

enum class AnomalyKind { kNonunitResidue, kNegativeExponent, kSumMismatch };
std::string_view AnomalyKindName(AnomalyKind kind);

struct AnomalyReport {
  AnomalyKind kind;
  std::string details;
  // Trial-division result on P itself.
  std::vector<int64_t> partial_exponents;
  mpz_class residue;
  // A representation with negative entries that sums to n, when found.
  std::optional<std::vector<int64_t>> reconstructed;
};

struct NegativeSearchBudget {
  uint32_t max_subset = 2;
};

using FactorOutcome = std::variant<ExponentVector, AnomalyReport>;

FactorOutcome FactorTally(const TallyProduct& product, const PrimeTable& table, uint32_t voters,
                          NegativeSearchBudget budget = {});

// Votes per candidate (0-based) from an honest exponent vector.
std::vector<uint64_t> CandidateTotals(const ExponentVector& exponents, const PrimeTable& table,
                                      const PrimeAssignment& assignment, const CandidateBlockMap& blocks);

struct CollusionFinding {
  GroupElement g_s;
  uint64_t prime_i;
  uint64_t prime_j;
  size_t pairs_tested;
};

// Two colluders with distinct masked primes search ordered prime pairs
// (p_i, p_j) with masked_i / masked_j = p_i / p_j; a unique match yields g^s.
std::optional<CollusionFinding> CollusionUnmask(const GroupElement& masked_i, const GroupElement& masked_j,
                                                const PrimeTable& table);

}  // namespace boardroom
