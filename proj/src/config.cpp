#include "boardroom/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "boardroom/ballot.hpp"

namespace boardroom {

const PartyInfo* ElectionConfig::Find(PartyId id) const {
  for (const auto& p : parties)
    if (p.id == id) return &p;
  return nullptr;
}

std::vector<PartyId> ElectionConfig::Voters() const {
  std::vector<PartyId> out;
  for (const auto& p : parties)
    if (!ea_mode || p.id != distributor) out.push_back(p.id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PartyId> ElectionConfig::MaskedHolders() const {
  std::vector<PartyId> out;
  for (PartyId id : Voters())
    if (IsMaskedHolder(id)) out.push_back(id);
  return out;
}

bool ElectionConfig::IsVoter(PartyId id) const { return Find(id) && (!ea_mode || id != distributor); }

void ElectionConfig::Validate() const {
  if (election_id.empty()) throw ConfigError("election_id is empty");
  if (!group) throw ConfigError("group parameters missing");
  if (ea_mode ? n < 1 : n < 2) throw ConfigError(ea_mode ? "need n >= 1" : "need n >= 2");
  if (m < 1 || lambda < 1) throw ConfigError("need m >= 1 and lambda >= 1");
  if (candidates.size() != m) throw ConfigError("candidate list must hold m names");
  std::set<PartyId> ids;
  for (const auto& p : parties)
    if (!ids.insert(p.id).second) throw ConfigError("duplicate party id " + std::to_string(p.id));
  if (!Find(distributor)) throw ConfigError("distributor is not in the roster");
  if (Voters().size() != n)
    throw ConfigError("roster has " + std::to_string(Voters().size()) + " voters, config says n = " +
                      std::to_string(n));
  if (PresetName(*group) == "custom") {
    auto problems = ValidateParams(*group);
    if (!problems.empty()) throw ConfigError("group parameters invalid: " + problems.front());
  }
  if (strict_lambda) {
    auto check = CheckLambdaPolicy(lambda, m, n, ea_mode);
    if (!check.ok) throw ConfigError("strict lambda policy: " + check.message);
  }
  try {
    if (primes)
      TableFromPrimes(lambda, m, n, *primes, *group);
    else
      SelectPrimes(lambda, m, n, *group);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("prime table: ") + e.what());
  }
}

Json GroupToJson(const GroupParams& params) {
  std::string preset = PresetName(params);
  if (preset != "custom") return preset;
  return Json{{"q", ToHexString(params.modulus())}, {"g", ToHexString(params.generator())}};
}

GroupPtr GroupFromJson(const Json& j) {
  if (j.is_string()) return PresetGroup(j.get<std::string>());
  return MakeGroup(FromHexString(j.at("q").get<std::string>()), FromHexString(j.at("g").get<std::string>()));
}

Json ElectionConfig::ToJson() const {
  Json roster = Json::array();
  for (const auto& p : parties) roster.push_back({{"id", p.id}, {"name", p.name}, {"verify_key", ToHex(p.key.bytes)}});
  Json j{{"election_id", election_id},
         {"n", n},
         {"m", m},
         {"lambda", lambda},
         {"params", GroupToJson(*group)},
         {"distributor", distributor},
         {"candidates", candidates},
         {"parties", roster},
         {"round_timeout_ms", round_timeout.count()},
         {"strict_lambda", strict_lambda},
         {"ea_mode", ea_mode}};
  if (primes) j["primes"] = *primes;
  if (!relay.empty()) j["relay"] = relay;
  return j;
}

ElectionConfig ElectionConfig::FromJson(const Json& j) {
  try {
    ElectionConfig c;
    c.election_id = j.at("election_id").get<std::string>();
    c.n = j.at("n").get<uint32_t>();
    c.m = j.at("m").get<uint32_t>();
    c.lambda = j.value("lambda", 1u);
    c.group = GroupFromJson(j.at("params"));
    c.distributor = j.value("distributor", 0u);
    c.candidates = j.contains("candidates") ? j.at("candidates").get<std::vector<std::string>>()
                                            : DefaultCandidateNames(c.m);
    for (const auto& p : j.at("parties")) {
      PartyInfo info{p.at("id").get<PartyId>(), p.value("name", ""), {}};
      Bytes key = FromHex(p.at("verify_key").get<std::string>());
      if (key.size() != info.key.bytes.size()) throw ConfigError("verify_key must be 32 bytes");
      std::copy(key.begin(), key.end(), info.key.bytes.begin());
      c.parties.push_back(std::move(info));
    }
    c.round_timeout = std::chrono::milliseconds(j.value("round_timeout_ms", int64_t{60000}));
    c.strict_lambda = j.value("strict_lambda", false);
    c.ea_mode = j.value("ea_mode", false);
    if (j.contains("primes")) c.primes = j.at("primes").get<std::vector<uint64_t>>();
    c.relay = j.value("relay", "");
    return c;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const DecodeError& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

Json LoadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void SaveJson(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

ElectionConfig LoadConfig(const std::string& path) {
  auto c = ElectionConfig::FromJson(LoadJson(path));
  c.Validate();
  return c;
}

std::vector<std::string> DefaultCandidateNames(uint32_t m) {
  std::vector<std::string> out;
  for (uint32_t i = 1; i <= m; ++i) out.push_back("Candidate " + std::to_string(i));
  return out;
}

}  // namespace boardroom
