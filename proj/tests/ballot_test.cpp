#include "boardroom/ballot.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numeric>

#include "boardroom/elgamal.hpp"

using namespace boardroom;

namespace {

GroupElement El(const GroupPtr& g, uint64_t v) { return GroupElement::FromInteger(g, static_cast<unsigned long>(v)); }

mpz_class Hex(const char* h) { return FromHexString(h); }

struct ToyElection {
  GroupPtr group;
  PrimeTable table;
  PrimeAssignment assignment;
  Mask mask;
  MaskedPrimeList masked;
  std::vector<PrivateShare> keys;
  AggregatePublicKey pk;
};

ToyElection MakeElection(uint32_t lambda, uint32_t m, uint32_t n, Rng& rng) {
  auto group = ToyGroup();
  auto table = SelectPrimes(lambda, m, n, *group);
  auto assignment = RandomAssignment(table, rng);
  auto mask = Mask::Draw(group, rng);
  auto masked = MaskAll(assignment, mask);
  std::vector<PrivateShare> keys;
  std::vector<PublicShare> pubs;
  for (uint32_t i = 0; i < n; ++i) {
    auto [d, pub] = Keygen(group, rng, i);
    keys.push_back(d);
    pubs.push_back(pub);
  }
  return {group, table, assignment, mask, masked, keys, Aggregate(pubs)};
}

// Voter 0 is the distributor and encrypts its raw prime.
TallyProduct RunPipeline(const ToyElection& e, const std::vector<uint32_t>& indices, Rng& rng) {
  std::vector<Ciphertext> votes;
  for (size_t i = 0; i < indices.size(); ++i) {
    GroupElement m = i == 0 ? El(e.group, e.assignment.primes[indices[i]]) : e.masked[indices[i]];
    votes.push_back(Encrypt(m, e.pk, rng).ciphertext);
  }
  std::vector<GroupElement> as;
  for (auto& v : votes) as.push_back(v.a);
  std::vector<DecryptionShare> shares;
  for (auto& k : e.keys) shares.push_back(ShareForProduct(as, k, "toy"));
  auto n = static_cast<uint32_t>(indices.size());
  return ComputeProduct(votes, shares, UnmaskFactor(n - 1, e.mask), "toy");
}

}  // namespace

TEST(SelectPrimes, FirstNinePrimes) {
  auto t = SelectPrimes(3, 3, 4, *ToyGroup());
  EXPECT_EQ(t.primes, (std::vector<uint64_t>{2, 3, 5, 7, 11, 13, 17, 19, 23}));
  EXPECT_EQ(t.max_prime(), 23u);
}

TEST(SelectPrimes, PoolBelowSixteenBits) { EXPECT_EQ(PrimesBelow(1u << 16).size(), 6542u); }

TEST(SelectPrimes, RejectsWhenPowerReachesModulus) {
  // 23^4 = 279841 exceeds the 17-bit safe prime 130787.
  auto small = MakeGroup(130787, 4);
  try {
    SelectPrimes(3, 3, 4, *small);
    FAIL() << "expected rejection";
  } catch (const PrimeConstraintError& e) {
    EXPECT_EQ(e.min_modulus_bits(), 20u);
  }
  EXPECT_NO_THROW(SelectPrimes(3, 3, 3, *small));  // 23^3 = 12167
}

TEST(SelectPrimes, BoundHoldsAcrossShapes) {
  auto g = ToyGroup();
  for (uint32_t lambda = 1; lambda <= 3; ++lambda)
    for (uint32_t m = 1; m <= 4; ++m)
      for (uint32_t n = 1; n <= 8; ++n) {
        auto t = SelectPrimes(lambda, m, n, *g);
        ASSERT_EQ(t.size(), lambda * m);
        mpz_class b = static_cast<unsigned long>(t.max_prime()), bn;
        mpz_pow_ui(bn.get_mpz_t(), b.get_mpz_t(), n);
        EXPECT_LT(bn, g->modulus());
      }
}

TEST(SelectPrimes, RejectsZeroShape) { EXPECT_THROW(SelectPrimes(0, 3, 4, *ToyGroup()), std::invalid_argument); }

TEST(TableFromPrimes, AcceptsAdmissibleSet) {
  auto t = TableFromPrimes(1, 3, 4, {11, 3, 7}, *ToyGroup());
  EXPECT_EQ(t.primes, (std::vector<uint64_t>{3, 7, 11}));
  EXPECT_THROW(TableFromPrimes(1, 3, 4, {3, 3, 7}, *ToyGroup()), std::invalid_argument);
  EXPECT_THROW(TableFromPrimes(1, 3, 4, {3, 9, 7}, *ToyGroup()), std::invalid_argument);
  EXPECT_THROW(TableFromPrimes(1, 3, 4, {3, 7}, *ToyGroup()), std::invalid_argument);
}

TEST(LambdaPolicy, Cases) {
  EXPECT_TRUE(CheckLambdaPolicy(3, 3, 4, false).ok);
  auto warn = CheckLambdaPolicy(1, 3, 4, false);
  EXPECT_FALSE(warn.ok);
  EXPECT_FALSE(warn.message.empty());
  EXPECT_TRUE(CheckLambdaPolicy(1, 3, 4, true).ok);
  EXPECT_FALSE(CheckLambdaPolicy(2, 2, 4, false).ok);  // 4 <= 4
}

TEST(Blocks, ContiguousNumbering) {
  CandidateBlockMap b{3, 3};
  EXPECT_EQ(b.CandidateOf(0), 0u);
  EXPECT_EQ(b.CandidateOf(2), 0u);
  EXPECT_EQ(b.CandidateOf(3), 1u);
  EXPECT_EQ(b.CandidateOf(5), 1u);
  EXPECT_EQ(b.CandidateOf(8), 2u);
  EXPECT_EQ(b.FirstIndex(1), 3u);
  EXPECT_THROW(b.CandidateOf(9), std::out_of_range);
  EXPECT_THROW(b.FirstIndex(3), std::out_of_range);
}

TEST(Assignment, PermutationAndRoundTrip) {
  auto t = SelectPrimes(3, 3, 4, *ToyGroup());
  auto rng = Rng::FromSeed(5);
  for (int i = 0; i < 50; ++i) {
    auto a = RandomAssignment(t, rng);
    ASSERT_TRUE(IsPermutationOf(a, t));
    uint32_t l = 0, m = 0;
    std::string id;
    auto back = PrimeAssignment::Parse(a.Serialize(3, 3, "e-1"), &l, &m, &id);
    EXPECT_EQ(back.primes, a.primes);
    EXPECT_EQ(l, 3u);
    EXPECT_EQ(m, 3u);
    EXPECT_EQ(id, "e-1");
  }
  PrimeAssignment bad{{2, 3, 5, 7, 11, 13, 17, 19, 19}};
  EXPECT_FALSE(IsPermutationOf(bad, t));
  auto bytes = PrimeAssignment{t.primes}.Serialize(3, 3, "x");
  bytes.push_back(0);
  EXPECT_THROW(PrimeAssignment::Parse(bytes, nullptr, nullptr, nullptr), DecodeError);
}

TEST(Assignment, ShuffleCoversAllPositions) {
  auto t = SelectPrimes(3, 1, 2, *ToyGroup());
  auto rng = Rng::FromSeed(9);
  std::map<std::vector<uint64_t>, int> seen;
  for (int i = 0; i < 600; ++i) seen[RandomAssignment(t, rng).primes]++;
  EXPECT_EQ(seen.size(), 6u);
  for (auto& [perm, count] : seen) EXPECT_GT(count, 60);
}

TEST(MaskAll, ZeroMaskIsIdentity) {
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  auto masked = MaskAll(PrimeAssignment{t.primes}, Mask::FromScalar(Scalar::Zero(g)));
  for (size_t i = 0; i < t.size(); ++i) EXPECT_EQ(masked[i].value(), static_cast<unsigned long>(t.primes[i]));
}

TEST(MaskAll, FixedMaskValues) {
  auto g = ToyGroup();
  auto mask = Mask::FromScalar(Scalar::FromInteger(g, 1234567));
  EXPECT_EQ(mask.g_s.value(), Hex("3f01b5938c07fd35"));
  auto masked = MaskAll(PrimeAssignment{{2, 3, 5}}, mask);
  EXPECT_EQ(masked[0].value(), Hex("7e036b27180ffa6a"));
  EXPECT_EQ(masked[1].value(), Hex("bd0520baa417f79f"));
  EXPECT_EQ(masked[2].value(), Hex("3b088be1bc27f7c6"));
}

TEST(MaskAll, DistinctValues) {
  auto rng = Rng::FromSeed(3);
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 4, 8, *g);
  auto masked = MaskAll(RandomAssignment(t, rng), Mask::Draw(g, rng));
  for (size_t i = 0; i < masked.size(); ++i)
    for (size_t j = i + 1; j < masked.size(); ++j) EXPECT_FALSE(masked[i] == masked[j]);
}

TEST(UnmaskFactor, Cases) {
  auto g = ToyGroup();
  auto rng = Rng::FromSeed(1);
  auto mask = Mask::Draw(g, rng);
  EXPECT_TRUE(UnmaskFactor(0, mask).IsOne());
  EXPECT_TRUE(UnmaskFactor(3, Mask::FromScalar(Scalar::Zero(g))).IsOne());
  auto fixed = Mask::FromScalar(Scalar::FromInteger(g, 1234567));
  auto u = UnmaskFactor(3, fixed);
  EXPECT_EQ(u.value(), Hex("a9c24edc2553eb39"));
  auto g3s = ModExp(fixed.g_s, Scalar::FromInteger(g, 3));
  EXPECT_TRUE(ModMul(g3s, u).IsOne());
  for (uint32_t k = 1; k < 10; ++k)
    EXPECT_TRUE(ModMul(ModExp(mask.g_s, Scalar::FromInteger(g, k)), UnmaskFactor(k, mask)).IsOne());
}

TEST(ComputeProduct, RepeatedPrime) {
  auto rng = Rng::FromSeed(11);
  auto e = MakeElection(3, 3, 3, rng);
  auto idx = static_cast<uint32_t>(
      std::find(e.assignment.primes.begin(), e.assignment.primes.end(), 5u) - e.assignment.primes.begin());
  auto p = RunPipeline(e, {idx, idx, idx}, rng);
  EXPECT_EQ(p.value.value(), 125);
}

TEST(ComputeProduct, WorkedShape) {
  auto rng = Rng::FromSeed(12);
  auto e = MakeElection(3, 3, 4, rng);
  std::vector<uint32_t> picks = {0, 4, 5, 8};
  auto p = RunPipeline(e, picks, rng);
  mpz_class expect = 1;
  for (auto i : picks) expect *= static_cast<unsigned long>(e.assignment.primes[i]);
  EXPECT_EQ(p.value.value(), expect);
  auto f = FactorTally(p, e.table, 4);
  ASSERT_TRUE(std::holds_alternative<ExponentVector>(f));
  auto& a = std::get<ExponentVector>(f);
  EXPECT_EQ(std::accumulate(a.exponents.begin(), a.exponents.end(), int64_t{0}), 4);
  EXPECT_EQ(a.residue, 1);
  auto totals = CandidateTotals(a, e.table, e.assignment, CandidateBlockMap{3, 3});
  EXPECT_EQ(totals, (std::vector<uint64_t>{1, 2, 1}));
}

TEST(ComputeProduct, Errors) {
  auto rng = Rng::FromSeed(13);
  auto e = MakeElection(2, 2, 2, rng);
  auto v0 = Encrypt(e.masked[0], e.pk, rng).ciphertext;
  auto v1 = Encrypt(e.masked[1], e.pk, rng).ciphertext;
  std::vector<Ciphertext> votes = {v0, v1};
  std::vector<GroupElement> as = {v0.a, v1.a};
  std::vector<DecryptionShare> one = {ShareForProduct(as, e.keys[0], "c")};
  auto unmask = UnmaskFactor(1, e.mask);
  EXPECT_THROW(ComputeProduct(votes, one, unmask, "c"), std::invalid_argument);
  std::vector<DecryptionShare> wrong = {ShareForProduct(as, e.keys[0], "c"), ShareForProduct(as, e.keys[1], "other")};
  EXPECT_THROW(ComputeProduct(votes, wrong, unmask, "c"), std::invalid_argument);
  std::vector<DecryptionShare> dup = {one[0], one[0]};
  EXPECT_THROW(ComputeProduct(votes, dup, unmask, "c"), std::invalid_argument);
  EXPECT_THROW(ComputeProduct({}, {}, unmask, "c"), std::invalid_argument);
}

TEST(FactorTally, Constructed) {
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  auto f = FactorTally({El(g, 4 * 3 * 5)}, t, 4);
  ASSERT_TRUE(std::holds_alternative<ExponentVector>(f));
  EXPECT_EQ(std::get<ExponentVector>(f).exponents, (std::vector<int64_t>{2, 1, 1, 0, 0, 0, 0, 0, 0}));
}

TEST(FactorTally, SumMismatch) {
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  auto f = FactorTally({El(g, 2 * 3 * 5)}, t, 4);
  ASSERT_TRUE(std::holds_alternative<AnomalyReport>(f));
  EXPECT_EQ(std::get<AnomalyReport>(f).kind, AnomalyKind::kSumMismatch);
}

TEST(FactorTally, NegativeVoteDetected) {
  // 2^2 * 3^-1 from the cheater, 5, 7, 11 from the others.
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  auto P = GroupElement::FromInteger(g, Hex("555555555555556d"));
  EXPECT_EQ(P, ModDiv(El(g, 4 * 5 * 7 * 11), El(g, 3)));
  auto f = FactorTally({P}, t, 4);
  ASSERT_TRUE(std::holds_alternative<AnomalyReport>(f));
  auto& r = std::get<AnomalyReport>(f);
  EXPECT_EQ(r.kind, AnomalyKind::kNegativeExponent);
  ASSERT_TRUE(r.reconstructed);
  EXPECT_EQ(*r.reconstructed, (std::vector<int64_t>{2, -1, 1, 1, 1, 0, 0, 0, 0}));
  EXPECT_NE(r.residue, 1);
}

TEST(FactorTally, BudgetZeroLeavesResidueOnly) {
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  auto f = FactorTally({ModDiv(El(g, 4 * 5 * 7 * 11), El(g, 3))}, t, 4, {.max_subset = 0});
  auto& r = std::get<AnomalyReport>(f);
  EXPECT_EQ(r.kind, AnomalyKind::kNonunitResidue);
  EXPECT_FALSE(r.reconstructed);
}

TEST(FactorTally, PairBudgetFindsTwoNegatives) {
  // 2^3 * 3^-1 * 5^-1 with two honest votes for 7: sum = 3 - 2 + 2 = 3, n = 3.
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 3, *g);
  auto P = ModDiv(El(g, 8 * 49), El(g, 15));
  auto f = FactorTally({P}, t, 3);
  auto& r = std::get<AnomalyReport>(f);
  ASSERT_TRUE(r.reconstructed);
  EXPECT_EQ(*r.reconstructed, (std::vector<int64_t>{3, -1, -1, 2, 0, 0, 0, 0, 0}));
}

TEST(CandidateTotals, AllForFirst) {
  auto rng = Rng::FromSeed(21);
  auto e = MakeElection(2, 3, 5, rng);
  auto p = RunPipeline(e, {0, 1, 0, 1, 1}, rng);
  auto a = std::get<ExponentVector>(FactorTally(p, e.table, 5));
  EXPECT_EQ(CandidateTotals(a, e.table, e.assignment, CandidateBlockMap{2, 3}), (std::vector<uint64_t>{5, 0, 0}));
}

TEST(CandidateTotals, SumsAssignedBlock) {
  // Primes at indices 3, 4, 5 belong to candidate 1; their table exponents add up.
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  PrimeAssignment asg{{2, 13, 17, 5, 7, 23, 3, 11, 19}};
  ExponentVector a{{0, 1, 1, 1, 0, 0, 0, 0, 1}, 1};  // 3, 5, 7, 23
  EXPECT_EQ(CandidateTotals(a, t, asg, CandidateBlockMap{3, 3}), (std::vector<uint64_t>{0, 3, 1}));
  ExponentVector residue{{0, 0, 0, 0, 0, 0, 0, 0, 0}, 7};
  EXPECT_THROW(CandidateTotals(residue, t, asg, CandidateBlockMap{3, 3}), std::invalid_argument);
}

// Every shape with n <= 8, m <= 4, lambda <= 3 against the plaintext histogram.
TEST(Property, OracleEquivalence) {
  auto rng = Rng::FromSeed(2024);
  for (uint32_t lambda = 1; lambda <= 3; ++lambda)
    for (uint32_t m = 1; m <= 4; ++m)
      for (uint32_t n = 1; n <= 8; ++n) {
        auto e = MakeElection(lambda, m, n, rng);
        std::vector<uint64_t> hist(m, 0);
        std::vector<uint32_t> picks;
        mpz_class raw = 1;
        for (uint32_t v = 0; v < n; ++v) {
          uint32_t c = static_cast<uint32_t>(rng.Below(m));
          uint32_t idx = c * lambda + static_cast<uint32_t>(rng.Below(lambda));
          hist[c]++;
          picks.push_back(idx);
          raw *= static_cast<unsigned long>(e.assignment.primes[idx]);
        }
        auto p = RunPipeline(e, picks, rng);
        ASSERT_EQ(p.value.value(), raw);
        auto f = FactorTally(p, e.table, n);
        ASSERT_TRUE(std::holds_alternative<ExponentVector>(f));
        auto& a = std::get<ExponentVector>(f);
        for (auto x : a.exponents) {
          EXPECT_GE(x, 0);
          EXPECT_LE(x, n);
        }
        EXPECT_EQ(CandidateTotals(a, e.table, e.assignment, CandidateBlockMap{lambda, m}), hist)
            << lambda << " " << m << " " << n;
      }
}

TEST(Property, MaskUnmaskIdentity) {
  auto g = ToyGroup();
  auto rng = Rng::FromSeed(77);
  auto t = SelectPrimes(3, 4, 8, *g);
  for (int trial = 0; trial < 200; ++trial) {
    auto mask = Mask::Draw(g, rng);
    auto asg = RandomAssignment(t, rng);
    auto masked = MaskAll(asg, mask);
    uint32_t n = 1 + static_cast<uint32_t>(rng.Below(8));
    auto prod = GroupElement::One(g);
    mpz_class raw = 1;
    for (uint32_t v = 0; v < n; ++v) {
      size_t i = rng.Below(asg.primes.size());
      raw *= static_cast<unsigned long>(asg.primes[i]);
      prod = ModMul(prod, v == 0 ? El(g, asg.primes[i]) : masked[i]);
    }
    EXPECT_EQ(ModMul(prod, UnmaskFactor(n - 1, mask)).value(), raw);
  }
}

TEST(Collusion, RecoversMask) {
  auto rng = Rng::FromSeed(31);
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  for (int trial = 0; trial < 50; ++trial) {
    auto mask = Mask::Draw(g, rng);
    auto asg = RandomAssignment(t, rng);
    auto masked = MaskAll(asg, mask);
    size_t i = rng.Below(9), j = rng.Below(8);
    if (j >= i) ++j;
    auto hit = CollusionUnmask(masked[i], masked[j], t);
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->g_s, mask.g_s);
    EXPECT_EQ(hit->prime_i, asg.primes[i]);
    EXPECT_EQ(hit->prime_j, asg.primes[j]);
    EXPECT_EQ(hit->pairs_tested, 72u);
  }
}

TEST(Collusion, EqualInputsFail) {
  auto rng = Rng::FromSeed(32);
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  auto masked = MaskAll(RandomAssignment(t, rng), Mask::Draw(g, rng));
  EXPECT_FALSE(CollusionUnmask(masked[0], masked[0], t));
}

TEST(Collusion, UnrelatedElementsFail) {
  auto rng = Rng::FromSeed(33);
  auto g = ToyGroup();
  auto t = SelectPrimes(3, 3, 4, *g);
  EXPECT_FALSE(CollusionUnmask(RandomElement(g, rng), RandomElement(g, rng), t));
}
