#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "boardroom/party.hpp"
#include "boardroom/transport.hpp"

namespace boardroom {

enum class FaultKind { kNone, kNegativeVote, kDistributorSwap, kMappingSwap, kWithholdVote, kWithholdShare, kDropOt };

struct FaultSpec {
  FaultKind kind = FaultKind::kNone;
  std::optional<PartyId> party;

  // "negative-vote", "distributor-swap:2", ... Throws std::invalid_argument.
  static FaultSpec Parse(std::string_view text);
  std::string Name() const;
};

// Config plus signing keys, all derived from one seed.
struct GeneratedElection {
  ElectionConfig config;
  std::map<PartyId, SigningKey> keys;
};

struct ElectionShape {
  std::string election_id = "sim";
  uint32_t n = 4;
  uint32_t m = 3;
  uint32_t lambda = 3;
  GroupPtr group;  // toy group when null
  bool ea_mode = false;
  bool strict_lambda = false;
  std::vector<std::string> candidates;  // defaults when empty
  std::optional<std::vector<uint64_t>> primes;
};

GeneratedElection GenerateElection(const ElectionShape& shape, uint64_t seed);
// Per-party randomness and signing key used by both simulated and live runs.
Rng PartyRng(uint64_t seed, PartyId id);
SigningKey PartySigningKey(uint64_t seed, PartyId id);
// Uniform choices in [0, m) for n voters.
std::vector<uint32_t> RandomChoices(uint64_t seed, uint32_t n, uint32_t m);

// In-process total-order bus. Broadcasts are verified, sequenced into the log
// and delivered to every attached party; direct messages go to one party and
// leave a digest record in the log.
class SimulationBus {
 public:
  SimulationBus(ElectionConfig config, std::optional<uint64_t> reorder_seed = std::nullopt);

  void Attach(Party& party);
  void DropDirectTraffic(PartyId party) { dropped_.insert(party); }

  // Delivers one queued submission. False when the queue is empty.
  bool Step();
  // Runs to quiescence; a stall with unfinished parties counts as a round
  // timeout for each of them.
  void Run();

  const BusLog& log() const { return log_; }
  BusLog& log() { return log_; }
  size_t rejected() const { return rejected_; }
  bool timed_out() const { return timed_out_; }

 private:
  void Submit(Envelope env);

  ElectionConfig config_;
  BusLog log_;
  std::vector<Party*> parties_;
  std::deque<Envelope> queue_;
  std::optional<Rng> reorder_;
  std::set<PartyId> dropped_;
  size_t rejected_ = 0;
  bool timed_out_ = false;
};

struct SimulationSpec {
  ElectionShape shape;
  uint64_t seed = 1;
  std::optional<std::vector<uint32_t>> choices;  // random when absent
  FaultSpec fault;
  std::optional<uint64_t> reorder_seed;
};

struct FaultTruth {
  std::optional<PartyId> party;
  std::optional<uint32_t> leaked_index;
  std::optional<std::pair<uint32_t, uint32_t>> swapped;
};

struct SimulationOutcome {
  ElectionConfig config;
  BusLog log;
  Json result;
  std::vector<uint32_t> choices;             // by voter, ascending id
  std::map<PartyId, uint32_t> indices;       // chosen table index per voter
  std::map<PartyId, PartyCounters> counters;
  std::map<PartyId, Phase> phases;
  std::optional<PrimeAssignment> assignment;
  std::optional<Mask> mask;
  MaskedPrimeList masked;
  std::map<PartyId, GroupElement> received;
  std::map<PartyId, std::optional<VoteProof>> proofs;
  FaultTruth fault;
  bool timed_out = false;

  uint64_t CoreExponentiations() const;
  uint64_t OtExponentiations() const;
  uint32_t OtSessionsServed() const;
  Json Instrumentation() const;
};

// Runs every party in-process. Throws std::invalid_argument for a bad spec and
// ConfigError for an invalid election shape.
SimulationOutcome RunSimulation(const SimulationSpec& spec);

}  // namespace boardroom
