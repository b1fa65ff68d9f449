#include "boardroom/ballot.hpp"

#include <algorithm>
#include <set>

namespace boardroom {

std::optional<size_t> PrimeTable::IndexOf(uint64_t p) const {
  auto it = std::lower_bound(primes.begin(), primes.end(), p);
  if (it == primes.end() || *it != p) return std::nullopt;
  return static_cast<size_t>(it - primes.begin());
}

std::vector<uint64_t> PrimesBelow(uint64_t limit) {
  std::vector<uint64_t> out;
  if (limit <= 2) return out;
  std::vector<bool> composite(limit, false);
  for (uint64_t i = 2; i < limit; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (uint64_t j = i * i; j < limit; j += i) composite[j] = true;
  }
  return out;
}

namespace {

bool IsSmallPrime(uint64_t p) {
  if (p < 2) return false;
  for (uint64_t d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

void CheckBound(const PrimeTable& table, uint32_t voters, const GroupParams& params) {
  mpz_class bound;
  mpz_class b = static_cast<unsigned long>(table.max_prime());
  mpz_pow_ui(bound.get_mpz_t(), b.get_mpz_t(), voters);
  if (bound < params.modulus()) return;
  size_t need = mpz_sizeinbase(bound.get_mpz_t(), 2) + 1;
  throw PrimeConstraintError("largest prime " + std::to_string(table.max_prime()) + " raised to n=" +
                                 std::to_string(voters) + " is not below the modulus; need a modulus of at least " +
                                 std::to_string(need) + " bits",
                             need);
}

void CheckShape(uint32_t lambda, uint32_t candidates, uint32_t voters) {
  if (lambda == 0 || candidates == 0 || voters == 0)
    throw std::invalid_argument("lambda, m and n must be positive");
}

}  // namespace

PrimeTable SelectPrimes(uint32_t lambda, uint32_t candidates, uint32_t voters, const GroupParams& params) {
  CheckShape(lambda, candidates, voters);
  size_t want = static_cast<size_t>(lambda) * candidates;
  uint64_t limit = 64;
  std::vector<uint64_t> primes;
  while ((primes = PrimesBelow(limit)).size() < want) limit *= 2;
  primes.resize(want);
  PrimeTable table{lambda, candidates, std::move(primes)};
  CheckBound(table, voters, params);
  return table;
}

PrimeTable TableFromPrimes(uint32_t lambda, uint32_t candidates, uint32_t voters, std::vector<uint64_t> primes,
                           const GroupParams& params) {
  CheckShape(lambda, candidates, voters);
  if (primes.size() != static_cast<size_t>(lambda) * candidates)
    throw std::invalid_argument("prime list must hold lambda * m entries");
  std::sort(primes.begin(), primes.end());
  if (std::adjacent_find(primes.begin(), primes.end()) != primes.end())
    throw std::invalid_argument("prime list contains duplicates");
  for (uint64_t p : primes)
    if (!IsSmallPrime(p)) throw std::invalid_argument(std::to_string(p) + " is not prime");
  PrimeTable table{lambda, candidates, std::move(primes)};
  CheckBound(table, voters, params);
  return table;
}

LambdaCheck CheckLambdaPolicy(uint32_t lambda, uint32_t candidates, uint32_t voters, bool trusted_authority) {
  uint64_t pool = static_cast<uint64_t>(lambda) * candidates;
  if (pool > voters || trusted_authority) return {true, ""};
  return {false, "lambda*m = " + std::to_string(pool) + " <= n = " + std::to_string(voters) +
                     "; repeated masked primes may reveal shared votes"};
}

uint32_t CandidateBlockMap::CandidateOf(uint32_t index) const {
  if (index >= size()) throw std::out_of_range("index outside the prime table");
  return index / lambda;
}

uint32_t CandidateBlockMap::FirstIndex(uint32_t candidate) const {
  if (candidate >= candidates) throw std::out_of_range("candidate out of range");
  return candidate * lambda;
}

Bytes PrimeAssignment::Serialize(uint32_t lambda, uint32_t candidates, std::string_view election_id) const {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(primes.size()));
  for (uint64_t p : primes) w.U64(p);
  w.U32(lambda).U32(candidates).Str(election_id);
  return std::move(w).Take();
}

PrimeAssignment PrimeAssignment::Parse(ByteSpan payload, uint32_t* lambda, uint32_t* candidates,
                                       std::string* election_id) {
  ByteReader r(payload);
  uint32_t count = r.U32();
  if (count > r.Remaining() / 8) throw DecodeError("assignment length exceeds payload");
  PrimeAssignment out;
  out.primes.reserve(count);
  for (uint32_t i = 0; i < count; ++i) out.primes.push_back(r.U64());
  uint32_t l = r.U32();
  uint32_t m = r.U32();
  std::string id = r.Str();
  r.ExpectDone();
  if (lambda) *lambda = l;
  if (candidates) *candidates = m;
  if (election_id) *election_id = std::move(id);
  return out;
}

PrimeAssignment RandomAssignment(const PrimeTable& table, Rng& rng) {
  PrimeAssignment out{table.primes};
  for (size_t i = out.primes.size(); i > 1; --i) std::swap(out.primes[i - 1], out.primes[rng.Below(i)]);
  return out;
}

bool IsPermutationOf(const PrimeAssignment& assignment, const PrimeTable& table) {
  std::vector<uint64_t> sorted = assignment.primes;
  std::sort(sorted.begin(), sorted.end());
  return sorted == table.primes;
}

Mask Mask::Draw(const GroupPtr& group, Rng& rng) { return FromScalar(RandomScalar(group, rng)); }

Mask Mask::FromScalar(const Scalar& s) { return Mask{s, GeneratorPow(s)}; }

Bytes Mask::Serialize(std::string_view election_id) const {
  ByteWriter w;
  w.Field(s.Encode()).Str(election_id);
  return std::move(w).Take();
}

MaskedPrimeList MaskAll(const PrimeAssignment& assignment, const Mask& mask) {
  const GroupPtr& group = mask.g_s.group();
  MaskedPrimeList out;
  out.reserve(assignment.primes.size());
  for (uint64_t p : assignment.primes)
    out.push_back(ModMul(GroupElement::FromInteger(group, static_cast<unsigned long>(p)), mask.g_s));
  return out;
}

GroupElement UnmaskFactor(uint32_t masked_votes, const Mask& mask) {
  const GroupPtr& group = mask.s.group();
  if (masked_votes == 0) return GroupElement::One(group);
  Scalar k = Scalar::Reduce(group, -mpz_class(static_cast<unsigned long>(masked_votes)));
  return ModExp(mask.g_s, k);
}

TallyProduct ComputeProduct(std::span<const Ciphertext> votes, std::span<const DecryptionShare> shares,
                            const GroupElement& unmask, std::string_view context) {
  if (votes.empty()) throw std::invalid_argument("no votes");
  if (votes.size() != shares.size())
    throw std::invalid_argument("vote count " + std::to_string(votes.size()) + " differs from share count " +
                                std::to_string(shares.size()));
  std::vector<GroupElement> as;
  std::vector<GroupElement> bs;
  for (const auto& v : votes) {
    as.push_back(v.a);
    bs.push_back(v.b);
  }
  Digest target = ProductTarget(as, context);
  std::set<PartyId> owners;
  for (const auto& s : shares) {
    if (!DigestEquals(s.target, target))
      throw std::invalid_argument("share from party " + std::to_string(s.owner) + " targets another product");
    if (!owners.insert(s.owner).second)
      throw std::invalid_argument("duplicate share from party " + std::to_string(s.owner));
  }
  return {ModMul(CombineUnchecked(ProductOf(bs), shares), unmask)};
}

std::string_view AnomalyKindName(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kNonunitResidue: return "nonunit-residue";
    case AnomalyKind::kNegativeExponent: return "negative-exponent";
    case AnomalyKind::kSumMismatch: return "sum-mismatch";
  }
  return "unknown";
}

namespace {

// Divides each table prime out of value at most cap times.
std::vector<int64_t> TrialDivide(mpz_class& value, const PrimeTable& table, uint32_t cap) {
  std::vector<int64_t> a(table.size(), 0);
  for (size_t i = 0; i < table.size(); ++i) {
    unsigned long p = table.primes[i];
    while (a[i] < cap && mpz_divisible_ui_p(value.get_mpz_t(), p)) {
      mpz_divexact_ui(value.get_mpz_t(), value.get_mpz_t(), p);
      ++a[i];
    }
  }
  return a;
}

int64_t Sum(const std::vector<int64_t>& a) {
  int64_t s = 0;
  for (auto x : a) s += x;
  return s;
}

struct SearchState {
  const mpz_class& product;
  const mpz_class& modulus;
  const PrimeTable& table;
  uint32_t voters;
  std::vector<std::pair<size_t, uint32_t>> chosen;
  std::optional<std::vector<int64_t>> found;
};

// Tries every multiplier prod p_j^{e_j} over `depth` more table primes from `start` on.
void Extend(SearchState& st, size_t start, uint32_t depth, const mpz_class& multiplier) {
  if (st.found) return;
  if (depth == 0) {
    mpz_class candidate = st.product * multiplier % st.modulus;
    auto a = TrialDivide(candidate, st.table, 2 * st.voters);
    if (candidate != 1) return;
    bool negative = false;
    for (auto [idx, e] : st.chosen) {
      a[idx] -= e;
      negative |= a[idx] < 0;
    }
    if (negative && Sum(a) == st.voters) st.found = std::move(a);
    return;
  }
  for (size_t i = start; i < st.table.size() && !st.found; ++i) {
    mpz_class m = multiplier;
    for (uint32_t e = 1; e <= st.voters && !st.found; ++e) {
      m = m * static_cast<unsigned long>(st.table.primes[i]) % st.modulus;
      st.chosen.emplace_back(i, e);
      Extend(st, i + 1, depth - 1, m);
      st.chosen.pop_back();
    }
  }
}

}  // namespace

FactorOutcome FactorTally(const TallyProduct& product, const PrimeTable& table, uint32_t voters,
                          NegativeSearchBudget budget) {
  mpz_class residue = product.value.value();
  auto a = TrialDivide(residue, table, voters);
  if (residue == 1 && Sum(a) == voters) return ExponentVector{std::move(a), residue};

  AnomalyReport report;
  report.partial_exponents = a;
  report.residue = residue;
  if (residue == 1) {
    report.kind = AnomalyKind::kSumMismatch;
    report.details = "exponents sum to " + std::to_string(Sum(a)) + ", expected " + std::to_string(voters);
    return report;
  }
  report.kind = AnomalyKind::kNonunitResidue;
  report.details = "product does not factor over the prime table";
  const mpz_class& q = product.value.group()->modulus();
  SearchState st{product.value.value(), q, table, voters, {}, std::nullopt};
  for (uint32_t k = 1; k <= budget.max_subset && !st.found; ++k) Extend(st, 0, k, mpz_class(1));
  if (st.found) {
    report.kind = AnomalyKind::kNegativeExponent;
    std::string neg;
    for (size_t i = 0; i < st.found->size(); ++i)
      if ((*st.found)[i] < 0)
        neg += (neg.empty() ? "" : ", ") + std::to_string((*st.found)[i]) + " for prime " +
               std::to_string(table.primes[i]);
    report.details = "product factors only with negative exponents: " + neg;
    report.reconstructed = std::move(st.found);
  }
  return report;
}

std::vector<uint64_t> CandidateTotals(const ExponentVector& exponents, const PrimeTable& table,
                                      const PrimeAssignment& assignment, const CandidateBlockMap& blocks) {
  if (exponents.residue != 1) throw std::invalid_argument("tally has a nonunit residue");
  if (assignment.primes.size() != blocks.size() || exponents.exponents.size() != table.size())
    throw std::invalid_argument("assignment, table and block map sizes disagree");
  std::vector<uint64_t> totals(blocks.candidates, 0);
  for (uint32_t idx = 0; idx < blocks.size(); ++idx) {
    auto pos = table.IndexOf(assignment.primes[idx]);
    if (!pos) throw std::invalid_argument("assigned prime missing from table");
    int64_t a = exponents.exponents[*pos];
    if (a < 0) throw std::invalid_argument("negative exponent in tally");
    totals[blocks.CandidateOf(idx)] += static_cast<uint64_t>(a);
  }
  return totals;
}

std::optional<CollusionFinding> CollusionUnmask(const GroupElement& masked_i, const GroupElement& masked_j,
                                                const PrimeTable& table) {
  if (!masked_i.group()->SameAs(*masked_j.group())) throw GroupMismatch();
  const GroupPtr& group = masked_i.group();
  const mpz_class& q = group->modulus();
  std::optional<CollusionFinding> hit;
  size_t tested = 0;
  size_t matches = 0;
  if (masked_i == masked_j) return std::nullopt;
  // masked_i * p_j == masked_j * p_i  (mod q)
  for (uint64_t pi : table.primes) {
    for (uint64_t pj : table.primes) {
      if (pi == pj) continue;
      ++tested;
      mpz_class lhs = masked_i.value() * static_cast<unsigned long>(pj) % q;
      mpz_class rhs = masked_j.value() * static_cast<unsigned long>(pi) % q;
      if (lhs != rhs) continue;
      ++matches;
      GroupElement g_s = ModDiv(masked_i, GroupElement::FromInteger(group, static_cast<unsigned long>(pi)));
      hit = CollusionFinding{g_s, pi, pj, 0};
    }
  }
  if (matches != 1) return std::nullopt;
  hit->pairs_tested = tested;
  return hit;
}

}  // namespace boardroom
