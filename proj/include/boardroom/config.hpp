#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "boardroom/crypto.hpp"
#include "boardroom/elgamal.hpp"
#include "boardroom/group.hpp"

namespace boardroom {

using Json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PartyInfo {
  PartyId id;
  std::string name;
  VerifyKey key;
};

struct ElectionConfig {
  std::string election_id;
  uint32_t n = 0;        // voters
  uint32_t m = 0;        // candidates
  uint32_t lambda = 1;   // primes per candidate
  GroupPtr group;
  PartyId distributor = 0;
  std::vector<std::string> candidates;
  // Voters plus, in EA mode, the non-voting distributor.
  std::vector<PartyInfo> parties;
  std::chrono::milliseconds round_timeout{60000};
  bool strict_lambda = false;
  bool ea_mode = false;
  // Custom prime set; the smallest primes when absent.
  std::optional<std::vector<uint64_t>> primes;
  // host:port of the relay for live roles.
  std::string relay;

  const PartyInfo* Find(PartyId id) const;
  // Parties that cast a vote.
  std::vector<PartyId> Voters() const;
  // Parties holding a decryption key.
  std::vector<PartyId> KeyHolders() const { return Voters(); }
  // Voters that receive a masked prime over OT.
  std::vector<PartyId> MaskedHolders() const;
  bool IsVoter(PartyId id) const;
  bool IsMaskedHolder(PartyId id) const { return IsVoter(id) && (ea_mode || id != distributor); }
  // Exponent k in the unmask factor g^{-ks}.
  uint32_t MaskedVotes() const { return ea_mode ? n : n - 1; }

  // Throws ConfigError naming the first violated rule.
  void Validate() const;

  Json ToJson() const;
  static ElectionConfig FromJson(const Json& j);
};

Json GroupToJson(const GroupParams& params);
// Accepts a preset name or {"q": hex, "g": hex}.
GroupPtr GroupFromJson(const Json& j);

ElectionConfig LoadConfig(const std::string& path);
void SaveJson(const std::string& path, const Json& j);
Json LoadJson(const std::string& path);

// Candidate labels "Candidate 1" .. "Candidate m".
std::vector<std::string> DefaultCandidateNames(uint32_t m);

}  // namespace boardroom
