// One line per acceptance criterion; exit status 0 only when every line passes.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <numeric>
#include <sstream>

#include "boardroom/net.hpp"
#include "boardroom/result.hpp"
#include "boardroom/simulation.hpp"

using namespace boardroom;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned limits.
constexpr double kToyWorkedLimitS = 1.0;
constexpr double kBigWorkedLimitS = 30.0;
constexpr double kBigSmokeLimitS = 300.0;
constexpr int kDecryptionTrials = 1000;
constexpr size_t kPrimesBelow2To16 = 6542;
constexpr int64_t kTable1Offset = 2;
constexpr int kOracleElections = 200;
constexpr int kFairnessTrials = 100;
constexpr int kInjections = 50;

int failures = 0;

void Report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

void Check(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, detail] = body();
    Report(name, ok, detail);
  } catch (const std::exception& e) {
    Report(name, false, std::string("exception: ") + e.what());
  }
}

double Seconds(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::vector<uint64_t> Histogram(const std::vector<uint32_t>& choices, uint32_t m) {
  std::vector<uint64_t> h(m, 0);
  for (auto c : choices) ++h[c];
  return h;
}

std::vector<uint64_t> Totals(const Json& result) {
  std::vector<uint64_t> out;
  if (result.at("tally").at("totals").is_null()) return out;
  for (const auto& t : result.at("tally").at("totals")) out.push_back(t.at("votes"));
  return out;
}

std::string Fmt(double s) {
  std::ostringstream o;
  o.precision(3);
  o << s << " s";
  return o.str();
}

std::pair<bool, std::string> WorkedExample(GroupPtr group, double limit) {
  SimulationSpec spec;
  spec.shape.group = group;
  spec.choices = std::vector<uint32_t>{1, 2, 1, 0};
  auto start = Clock::now();
  auto out = RunSimulation(spec);
  double t = Seconds(start);
  const Json& tally = out.result.at("tally");
  bool ok = tally.at("status") == "ok" && tally.at("exponent_sum") == 4 && tally.at("residue") == "1" &&
            Totals(out.result) == Histogram(*spec.choices, 3) && t < limit;
  std::ostringstream d;
  d << "sum(a)=" << tally.at("exponent_sum") << " residue=" << tally.at("residue").get<std::string>() << " totals="
    << Json(Totals(out.result)).dump() << " histogram=" << Json(Histogram(*spec.choices, 3)).dump() << " in "
    << Fmt(t) << " (limit " << limit << " s)";
  return {ok, d.str()};
}

bool VotesPrecedeShares(const BusLog& log, const GroupPtr& g) {
  size_t last_vote = 0, first_share = SIZE_MAX;
  for (size_t i = 0; i < log.size(); ++i) {
    const auto& e = log.entries()[i];
    if (e.kind != EntryKind::kEnvelope) continue;
    MsgType t = TypeOf(DecodeMessage(g, Envelope::Decode(e.body).payload));
    if (t == MsgType::kEncryptedVote) last_vote = std::max(last_vote, i);
    if (t == MsgType::kDistributorShare || t == MsgType::kVoterShare) first_share = std::min(first_share, i);
  }
  return last_vote < first_share;
}

// Exhaustive per-sender-order-preserving permutations of each round's envelopes.
size_t PermutationSweep(const SimulationOutcome& out, size_t& mismatches) {
  std::vector<std::pair<EntryKind, Bytes>> items;
  for (const auto& e : out.log.entries()) items.emplace_back(e.kind, e.body);
  std::map<uint8_t, std::vector<size_t>> slots;
  for (size_t i = 0; i < items.size(); ++i)
    if (items[i].first == EntryKind::kEnvelope) slots[Envelope::Decode(items[i].second).round].push_back(i);
  const Json expected = out.result.at("tally");
  size_t visited = 0;
  for (auto& [round, sl] : slots) {
    std::vector<size_t> order(sl.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::pair<PartyId, uint64_t>> who;
    for (size_t s : sl) {
      Envelope e = Envelope::Decode(items[s].second);
      who.emplace_back(e.sender, e.seq);
    }
    do {
      bool keeps = true;
      for (size_t i = 0; i < order.size() && keeps; ++i)
        for (size_t j = i + 1; j < order.size() && keeps; ++j)
          if (who[order[i]].first == who[order[j]].first && who[order[i]].second > who[order[j]].second) keeps = false;
      if (!keeps) continue;
      auto copy = items;
      for (size_t i = 0; i < sl.size(); ++i) copy[sl[i]] = items[sl[order[i]]];
      ++visited;
      if (Finalize(BusLog::Rebuild(copy)).at("tally") != expected) ++mismatches;
    } while (std::next_permutation(order.begin(), order.end()));
  }
  return visited;
}

// Relay plus one node per party on localhost; returns every node's result and
// the relay's persisted log path.
std::vector<Json> LiveElection(const GeneratedElection& gen, uint64_t seed, const std::vector<uint32_t>& choices,
                               const std::string& log_path) {
  Relay::Options ro;
  ro.log_path = log_path;
  ro.linger = std::chrono::milliseconds(200);
  Relay relay(gen.config, ro);
  std::thread relay_thread([&] { relay.Run(); });
  std::vector<std::unique_ptr<Node>> nodes;
  auto voters = gen.config.Voters();
  for (const auto& info : gen.config.parties) {
    Node::Options o;
    o.config = gen.config;
    o.id = info.id;
    o.key = gen.keys.at(info.id);
    o.rng = PartyRng(seed, info.id);
    o.relay_port = relay.port();
    auto pos = std::find(voters.begin(), voters.end(), info.id);
    if (pos != voters.end()) o.choice = choices.at(pos - voters.begin());
    nodes.push_back(std::make_unique<Node>(std::move(o)));
  }
  std::vector<std::future<Json>> futures;
  for (auto& n : nodes) futures.push_back(std::async(std::launch::async, [&n] { return n->Run(); }));
  std::vector<Json> results;
  for (auto& f : futures) results.push_back(f.get());
  relay_thread.join();
  return results;
}

}  // namespace

int main() {
  std::cout << "acceptance: toy group q=0xfffffffffffffa43, large group RFC 3526 2048-bit" << std::endl;

  Check("worked-example-toy", [] { return WorkedExample(ToyGroup(), kToyWorkedLimitS); });
  Check("worked-example-2048", [] { return WorkedExample(PresetGroup("modp2048"), kBigWorkedLimitS); });

  Check("decryption-identity", [] {
    GroupPtr g = ToyGroup();
    Rng rng = Rng::FromSeed(2024);
    int exact = 0;
    for (int trial = 0; trial < kDecryptionTrials; ++trial) {
      uint32_t n = 1 + trial % 8;
      std::vector<PrivateShare> priv;
      std::vector<PublicShare> pubs;
      for (PartyId i = 0; i < n; ++i) {
        auto [d, p] = Keygen(g, rng, i);
        priv.push_back(d);
        pubs.push_back(p);
      }
      AggregatePublicKey key = Aggregate(pubs);
      GroupElement m = GroupElement::FromInteger(g, 1 + rng.Below(~uint64_t{0} - 1));
      EncryptionRecord rec = Encrypt(m, key, rng);
      std::vector<GroupElement> as{rec.ciphertext.a};
      std::vector<DecryptionShare> shares;
      for (const auto& d : priv) shares.push_back(ShareForProduct(as, d, "trial"));
      if (Combine(rec.ciphertext.b, shares, key, ProductTarget(as, "trial")) == m) ++exact;
    }
    return std::make_pair(exact == kDecryptionTrials,
                          std::to_string(exact) + "/" + std::to_string(kDecryptionTrials) +
                              " trials recover M exactly, n in 1..8");
  });

  Check("prime-pool-6542", [] {
    size_t count = PrimesBelow(1u << 16).size();
    return std::make_pair(count == kPrimesBelow2To16, std::to_string(count) + " primes below 2^16");
  });

  Check("table1-accounting", [] {
    bool ok = true;
    std::ostringstream d;
    std::set<int64_t> offsets;
    for (uint32_t n : {2u, 4u, 8u}) {
      SimulationSpec spec;
      spec.shape.n = n;
      spec.seed = 100 + n;
      auto out = RunSimulation(spec);
      const Json& c = out.result.at("tally").at("counters");
      Json inst = out.Instrumentation();
      int64_t offset = inst.at("table1_offset");
      offsets.insert(offset);
      ok = ok && c.at("broadcast_rounds") == 5 && c.at("ot_sessions") == n - 1 &&
           out.result.at("tally").at("status") == "ok";
      d << "n=" << n << " rounds=" << c.at("broadcast_rounds") << " ot_sessions=" << c.at("ot_sessions")
        << " core=" << inst.at("core_exponentiations") << " table1=" << inst.at("table1_exponentiations")
        << " vs 3n=" << 3 * n << "; ";
    }
    ok = ok && offsets.size() == 1 && *offsets.begin() == kTable1Offset;
    d << "offset " << (offsets.size() == 1 ? "+" + std::to_string(*offsets.begin()) + " stable" : "varies")
      << " (one exponentiation per encryption; core = 4n+2 raw)";
    return std::make_pair(ok, d.str());
  });

  // Shared by the oracle and fairness criteria.
  std::vector<SimulationOutcome> honest;
  Check("oracle-equivalence", [&] {
    Rng pick = Rng::FromSeed(77);
    int match = 0;
    for (int i = 0; i < kOracleElections; ++i) {
      SimulationSpec spec;
      spec.seed = 10000 + i;
      spec.shape.n = 2 + pick.Below(7);
      spec.shape.m = 1 + pick.Below(4);
      spec.shape.lambda = 1 + pick.Below(3);
      auto out = RunSimulation(spec);
      if (out.result.at("tally").at("status") == "ok" &&
          Totals(out.result) == Histogram(out.choices, spec.shape.m))
        ++match;
      honest.push_back(std::move(out));
    }
    return std::make_pair(match == kOracleElections, std::to_string(match) + "/" +
                                                         std::to_string(kOracleElections) +
                                                         " random elections (n<=8, m<=4, lambda<=3) equal the histogram");
  });

  Check("fairness", [&] {
    int ordered = 0;
    for (const auto& out : honest) ordered += VotesPrecedeShares(out.log, out.config.group);
    Rng pick = Rng::FromSeed(31);
    int differ = 0;
    for (int trial = 0; trial < kFairnessTrials; ++trial) {
      const auto& out = honest.at(trial);
      ElectionView view = ReplayView(out.log);
      std::vector<GroupElement> bs;
      for (const auto& [id, ct] : view.votes()) bs.push_back(ct.b);
      GroupElement b = ProductOf(bs);
      std::vector<DecryptionShare> all{*view.distributor_share()};
      for (const auto& [id, sh] : view.voter_shares()) all.push_back(sh);
      GroupElement full = CombineUnchecked(b, all);
      std::vector<DecryptionShare> sub;
      size_t drop = pick.Below(all.size());
      for (size_t i = 0; i < all.size(); ++i)
        if (i != drop && pick.Below(2)) sub.push_back(all[i]);
      differ += CombineUnchecked(b, sub) != full;
    }
    bool ok = ordered == static_cast<int>(honest.size()) && differ == kFairnessTrials;
    return std::make_pair(ok, "votes precede shares in " + std::to_string(ordered) + "/" +
                                  std::to_string(honest.size()) + " honest logs; strict-subset combine differs in " +
                                  std::to_string(differ) + "/" + std::to_string(kFairnessTrials));
  });

  Check("cheating-detection", [] {
    int neg = 0, swap = 0;
    for (int i = 0; i < kInjections; ++i) {
      SimulationSpec spec;
      spec.seed = 500 + i;
      spec.fault.kind = FaultKind::kNegativeVote;
      auto out = RunSimulation(spec);
      const Json& t = out.result.at("tally");
      if (!t.at("anomaly").is_null() && t.at("anomaly").at("kind") == "negative-exponent") {
        auto rec = t.at("anomaly").at("reconstructed").get<std::vector<int64_t>>();
        auto primes = t.at("primes").get<std::vector<uint64_t>>();
        uint64_t leaked = out.assignment->primes.at(*out.fault.leaked_index);
        size_t pos = std::find(primes.begin(), primes.end(), leaked) - primes.begin();
        if (pos < rec.size() && rec[pos] == -1) ++neg;
      }
      spec.fault.kind = FaultKind::kDistributorSwap;
      auto sw = RunSimulation(spec);
      size_t alleged = 0, unmask = 0;
      for (size_t k = 0; k < sw.log.size(); ++k) {
        const auto& e = sw.log.entries()[k];
        if (e.kind != EntryKind::kEnvelope) continue;
        Envelope env = Envelope::Decode(e.body);
        MsgType type = TypeOf(DecodeMessage(sw.config.group, env.payload));
        if (type == MsgType::kAllegation && env.sender == *sw.fault.party && !alleged) alleged = k;
        if (type == MsgType::kUnmaskReveal) unmask = k;
      }
      if (alleged && alleged < unmask && sw.result.at("tally").at("status") == "halted") ++swap;
    }
    bool ok = neg == kInjections && swap == kInjections;
    return std::make_pair(ok, "negative-vote: " + std::to_string(neg) + "/" + std::to_string(kInjections) +
                                  " anomaly reports reconstruct -1; distributor-swap: " + std::to_string(swap) + "/" +
                                  std::to_string(kInjections) + " pre-tally allegations by the victim");
  });

  Check("ot-sweep", [] {
    GroupPtr g = ToyGroup();
    Rng rng = Rng::FromSeed(909);
    int sessions = 0, exact = 0, sealed = 0, expected_sealed = 0, foreign = 0;
    for (uint32_t n : {2u, 9u, 16u}) {
      std::vector<Bytes> strings;
      for (uint32_t i = 0; i < n; ++i) { std::string s = "string-" + std::to_string(i) + "-of-" + std::to_string(n); strings.emplace_back(s.begin(), s.end()); }
      for (uint32_t gamma = 0; gamma < n; ++gamma) {
        ++sessions;
        OtnSender sender(g, gamma, strings, rng.Fork("s" + std::to_string(sessions)));
        OtnReceiver receiver(g, gamma, OtChoice::Make(gamma, n), rng.Fork("r" + std::to_string(sessions)));
        Bytes transfer = sender.Respond(receiver.OnSetup(sender.Start()));
        auto attempts = receiver.TryAllBlobs(transfer);
        foreign += receiver.CountOpenableForeignBranches(transfer);
        bool only_chosen = attempts.size() == n;
        for (uint32_t i = 0; i < n && only_chosen; ++i) {
          if (i == gamma) continue;
          ++expected_sealed;
          if (!attempts[i]) ++sealed;
        }
        if (receiver.Finish(transfer) == strings[gamma] && attempts[gamma] && *attempts[gamma] == strings[gamma])
          ++exact;
      }
    }
    bool ok = exact == sessions && sealed == expected_sealed && foreign == 0;
    return std::make_pair(ok, std::to_string(exact) + "/" + std::to_string(sessions) +
                                  " sessions (N in {2,9,16}, every gamma) recover the chosen string; " +
                                  std::to_string(sealed) + "/" + std::to_string(expected_sealed) +
                                  " non-chosen blobs fail authentication; " +
                                  std::to_string(foreign) + " foreign branches openable");
  });

  Check("collusion", [] {
    SimulationSpec spec;
    spec.seed = 1;
    spec.choices = std::vector<uint32_t>{1, 2, 1, 0};
    auto out = RunSimulation(spec);
    const auto& c = out.config;
    auto holders = c.MaskedHolders();
    for (size_t i = 0; i < holders.size(); ++i)
      for (size_t j = i + 1; j < holders.size(); ++j) {
        PartyId a = holders[i], b = holders[j];
        if (out.indices.at(a) == out.indices.at(b)) continue;
        PrimeTable table = TableFromPrimes(c.lambda, c.m, c.MaskedVotes(),
                                           out.result.at("tally").at("primes").get<std::vector<uint64_t>>(), *c.group);
        auto found = CollusionUnmask(out.received.at(a), out.received.at(b), table);
        bool ok = found && found->g_s == out.mask->g_s;
        return std::make_pair(ok, "voters " + std::to_string(a) + "," + std::to_string(b) +
                                      (ok ? " recover g^s = " + ToHexString(found->g_s.value()) + " after " +
                                                std::to_string(found->pairs_tested) + " ordered pairs"
                                          : " did not recover g^s"));
      }
    return std::make_pair(false, std::string("no colluding pair with distinct masked primes"));
  });

  Check("replay-determinism", [] {
    const uint64_t seed = 61;
    ElectionShape shape;
    shape.election_id = "acceptance-live";
    GeneratedElection gen = GenerateElection(shape, seed);
    std::string path = (std::filesystem::temp_directory_path() / "boardroom-acceptance.buslog").string();
    auto results = LiveElection(gen, seed, {2, 1, 0, 2}, path);
    Json replayed = Finalize(BusLog::Load(path));
    std::filesystem::remove(path);
    bool live_ok = results.front().at("tally").at("status") == "ok";
    for (const auto& r : results) live_ok = live_ok && r.dump() == replayed.dump();
    size_t visited = 0, mismatches = 0;
    for (uint32_t n : {2u, 3u, 4u}) {
      SimulationSpec spec;
      spec.shape.n = n;
      spec.shape.m = 2;
      spec.shape.lambda = 2;
      spec.seed = 40 + n;
      visited += PermutationSweep(RunSimulation(spec), mismatches);
    }
    bool ok = live_ok && mismatches == 0;
    return std::make_pair(ok, std::string("tally of the persisted live log ") +
                                  (live_ok ? "is byte-identical to all " + std::to_string(results.size()) +
                                                 " live results"
                                           : "DIFFERS from the live results") +
                                  "; " + std::to_string(visited) + " within-round permutations (n=2,3,4), " +
                                  std::to_string(mismatches) + " changed the result");
  });

  Check("smoke-2048-n16", [] {
    SimulationSpec spec;
    spec.shape.group = PresetGroup("modp2048");
    spec.shape.n = 16;
    spec.seed = 16;
    auto start = Clock::now();
    auto out = RunSimulation(spec);
    double t = Seconds(start);
    bool ok = out.result.at("tally").at("status") == "ok" && Totals(out.result) == Histogram(out.choices, 3) &&
              t < kBigSmokeLimitS;
    return std::make_pair(ok, "n=16 m=3 lambda=3 at 2048 bits: totals " + Json(Totals(out.result)).dump() + " in " +
                                  Fmt(t) + " (limit " + std::to_string(static_cast<int>(kBigSmokeLimitS)) + " s)");
  });

  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all criteria pass")
            << std::endl;
  return failures ? 1 : 0;
}
