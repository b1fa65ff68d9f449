#include "boardroom/simulation.hpp"

#include <algorithm>

#include "boardroom/result.hpp"

namespace boardroom {

FaultSpec FaultSpec::Parse(std::string_view text) {
  FaultSpec f;
  std::string_view name = text;
  if (auto colon = text.find(':'); colon != std::string_view::npos) {
    name = text.substr(0, colon);
    std::string id(text.substr(colon + 1));
    try {
      size_t used = 0;
      unsigned long v = std::stoul(id, &used);
      if (used != id.size()) throw std::invalid_argument("");
      f.party = static_cast<PartyId>(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad party id in fault '" + std::string(text) + "'");
    }
  }
  if (name == "none" || name.empty()) f.kind = FaultKind::kNone;
  else if (name == "negative-vote") f.kind = FaultKind::kNegativeVote;
  else if (name == "distributor-swap") f.kind = FaultKind::kDistributorSwap;
  else if (name == "mapping-swap") f.kind = FaultKind::kMappingSwap;
  else if (name == "withhold-vote") f.kind = FaultKind::kWithholdVote;
  else if (name == "withhold-share") f.kind = FaultKind::kWithholdShare;
  else if (name == "drop-ot") f.kind = FaultKind::kDropOt;
  else throw std::invalid_argument("unknown fault '" + std::string(name) + "'");
  return f;
}

std::string FaultSpec::Name() const {
  std::string base;
  switch (kind) {
    case FaultKind::kNone: base = "none"; break;
    case FaultKind::kNegativeVote: base = "negative-vote"; break;
    case FaultKind::kDistributorSwap: base = "distributor-swap"; break;
    case FaultKind::kMappingSwap: base = "mapping-swap"; break;
    case FaultKind::kWithholdVote: base = "withhold-vote"; break;
    case FaultKind::kWithholdShare: base = "withhold-share"; break;
    case FaultKind::kDropOt: base = "drop-ot"; break;
  }
  return party ? base + ":" + std::to_string(*party) : base;
}

Rng PartyRng(uint64_t seed, PartyId id) { return Rng::FromSeed(seed).Fork("party/" + std::to_string(id)); }

SigningKey PartySigningKey(uint64_t seed, PartyId id) {
  Rng r = Rng::FromSeed(seed).Fork("sign/" + std::to_string(id));
  std::array<uint8_t, 32> s;
  r.Fill(s);
  return SigningKey::FromSeed(s);
}

std::vector<uint32_t> RandomChoices(uint64_t seed, uint32_t n, uint32_t m) {
  Rng r = Rng::FromSeed(seed).Fork("choices");
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < n; ++i) out.push_back(static_cast<uint32_t>(r.Below(m)));
  return out;
}

GeneratedElection GenerateElection(const ElectionShape& shape, uint64_t seed) {
  GeneratedElection g;
  ElectionConfig& c = g.config;
  c.election_id = shape.election_id;
  c.n = shape.n;
  c.m = shape.m;
  c.lambda = shape.lambda;
  c.group = shape.group ? shape.group : ToyGroup();
  c.ea_mode = shape.ea_mode;
  c.strict_lambda = shape.strict_lambda;
  c.candidates = shape.candidates.empty() ? DefaultCandidateNames(shape.m) : shape.candidates;
  c.primes = shape.primes;
  uint32_t parties = shape.ea_mode ? shape.n + 1 : shape.n;
  c.distributor = shape.ea_mode ? shape.n : 0;
  for (PartyId id = 0; id < parties; ++id) {
    SigningKey k = PartySigningKey(seed, id);
    std::string name = id == c.distributor ? (shape.ea_mode ? "authority" : "distributor") : "voter-" + std::to_string(id);
    c.parties.push_back(PartyInfo{id, name, k.verify_key()});
    g.keys.emplace(id, std::move(k));
  }
  c.Validate();
  return g;
}

SimulationBus::SimulationBus(ElectionConfig config, std::optional<uint64_t> reorder_seed)
    : config_(std::move(config)) {
  log_.Append(EntryKind::kGenesis, GenesisBody(config_));
  if (reorder_seed) reorder_ = Rng::FromSeed(*reorder_seed).Fork("reorder");
}

void SimulationBus::Attach(Party& party) {
  parties_.push_back(&party);
  party.SetSender([this](Envelope env) { Submit(std::move(env)); });
}

void SimulationBus::Submit(Envelope env) { queue_.push_back(std::move(env)); }

bool SimulationBus::Step() {
  if (queue_.empty()) return false;
  size_t pick = 0;
  if (reorder_) {
    // Interleave senders freely but keep each sender's own order, as a
    // stream connection would.
    std::vector<size_t> heads;
    std::set<PartyId> seen;
    for (size_t i = 0; i < queue_.size(); ++i)
      if (seen.insert(queue_[i].sender).second) heads.push_back(i);
    pick = heads[reorder_->Below(heads.size())];
  }
  Envelope env = std::move(queue_[pick]);
  queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(pick));

  const PartyInfo* sender = config_.Find(env.sender);
  if (!sender || !VerifyEnvelope(env, sender->key)) {
    ++rejected_;
    return true;
  }
  if (env.recipient) {
    if (dropped_.count(env.sender) || dropped_.count(*env.recipient)) return true;
    OtDigestRecord rec = OtDigestRecord::For(env);
    log_.Append(EntryKind::kOtDigest, rec.Encode());
    for (Party* p : parties_) p->OnOtDigest(rec);
    for (Party* p : parties_)
      if (p->id() == *env.recipient) p->OnDirect(env);
    return true;
  }
  const LogEntry& e = log_.Append(EntryKind::kEnvelope, env.Encode());
  (void)e;
  size_t index = log_.size() - 1;
  for (Party* p : parties_) p->OnBroadcast(env, index);
  return true;
}

void SimulationBus::Run() {
  for (;;) {
    while (Step()) {
    }
    bool stalled = false;
    for (Party* p : parties_)
      if (!p->finished()) stalled = true;
    if (!stalled) return;
    if (timed_out_) return;
    timed_out_ = true;
    for (Party* p : parties_) p->OnTimeout();
  }
}

uint64_t SimulationOutcome::CoreExponentiations() const {
  uint64_t t = 0;
  for (const auto& [id, c] : counters) t += c.core_exponentiations;
  return t;
}

uint64_t SimulationOutcome::OtExponentiations() const {
  uint64_t t = 0;
  for (const auto& [id, c] : counters) t += c.ot_exponentiations;
  return t;
}

uint32_t SimulationOutcome::OtSessionsServed() const {
  uint32_t t = 0;
  for (const auto& [id, c] : counters) t += c.ot_sessions;
  return t;
}

Json SimulationOutcome::Instrumentation() const {
  // One exponentiation per encryption in the reference count.
  const uint64_t core = CoreExponentiations();
  const uint64_t encryptions = config.n;
  const int64_t table1 = static_cast<int64_t>(core - encryptions);
  const int64_t reference = 3 * static_cast<int64_t>(config.n);
  uint64_t audit = 0;
  for (const auto& [id, c] : counters) audit += c.audit_exponentiations;
  return Json{{"core_exponentiations", core},
              {"table1_exponentiations", table1},
              {"table1_reference_3n", reference},
              {"table1_offset", table1 - reference},
              {"ot_exponentiations", OtExponentiations()},
              {"observer_exponentiations", audit},
              {"ot_sessions_served", OtSessionsServed()}};
}

SimulationOutcome RunSimulation(const SimulationSpec& spec) {
  GeneratedElection gen = GenerateElection(spec.shape, spec.seed);
  const ElectionConfig& cfg = gen.config;
  auto voters = cfg.Voters();

  SimulationOutcome out;
  out.config = cfg;
  out.choices = spec.choices ? *spec.choices : RandomChoices(spec.seed, cfg.n, cfg.m);
  if (out.choices.size() != cfg.n)
    throw std::invalid_argument("expected " + std::to_string(cfg.n) + " choices, got " +
                                std::to_string(out.choices.size()));
  for (auto c : out.choices)
    if (c >= cfg.m) throw std::invalid_argument("choice " + std::to_string(c) + " out of range");

  SimulationBus bus(cfg, spec.reorder_seed);
  std::map<PartyId, std::unique_ptr<Party>> parties;
  for (const auto& info : cfg.parties) {
    auto p = std::make_unique<Party>(cfg, info.id, gen.keys.at(info.id), PartyRng(spec.seed, info.id));
    bus.Attach(*p);
    parties.emplace(info.id, std::move(p));
  }
  for (auto& [id, p] : parties) p->Start();
  for (size_t i = 0; i < voters.size(); ++i) parties.at(voters[i])->Cast(out.choices[i]);
  for (PartyId v : voters) out.indices[v] = *parties.at(v)->chosen_index();

  Party& dist = *parties.at(cfg.distributor);
  auto holders = cfg.MaskedHolders();
  const FaultSpec& f = spec.fault;
  auto pick = [&](PartyId fallback) {
    PartyId who = f.party.value_or(fallback);
    if (!cfg.Find(who)) throw std::invalid_argument("fault party " + std::to_string(who) + " not in roster");
    return who;
  };
  auto other_block = [&](uint32_t idx) {
    if (cfg.m < 2) throw std::invalid_argument("fault needs at least two candidates");
    CandidateBlockMap blocks{cfg.lambda, cfg.m};
    return blocks.FirstIndex((blocks.CandidateOf(idx) + 1) % cfg.m);
  };
  switch (f.kind) {
    case FaultKind::kNone: break;
    case FaultKind::kNegativeVote: {
      if (holders.empty()) throw std::invalid_argument("no masked-prime holder to cheat");
      PartyId cheater = pick(holders.front());
      if (!cfg.IsMaskedHolder(cheater)) throw std::invalid_argument("negative-vote needs a masked-prime holder");
      std::set<uint32_t> used;
      for (auto& [v, idx] : out.indices) used.insert(idx);
      std::optional<uint32_t> b;
      for (uint32_t i = 0; i < cfg.lambda * cfg.m && !b; ++i)
        if (!used.count(i)) b = i;
      if (!b) throw std::invalid_argument("negative-vote needs a table index nobody chose");
      PartyFaults pf;
      pf.negative_vote_leak = dist.masked_list().at(*b);
      parties.at(cheater)->SetFaults(pf);
      out.fault = {cheater, b, std::nullopt};
      break;
    }
    case FaultKind::kDistributorSwap:
    case FaultKind::kMappingSwap: {
      if (holders.empty()) throw std::invalid_argument("no masked-prime holder to target");
      PartyId victim = pick(holders.front());
      if (!cfg.IsMaskedHolder(victim)) throw std::invalid_argument("swap target must be a masked-prime holder");
      uint32_t i = out.indices.at(victim);
      std::pair<uint32_t, uint32_t> sw{i, other_block(i)};
      PartyFaults pf;
      if (f.kind == FaultKind::kDistributorSwap)
        pf.serve_swap[victim] = sw;
      else
        pf.mapping_swap = sw;
      dist.SetFaults(pf);
      out.fault = {victim, std::nullopt, sw};
      break;
    }
    case FaultKind::kWithholdVote:
    case FaultKind::kWithholdShare: {
      PartyId who = pick(voters.back());
      PartyFaults pf;
      (f.kind == FaultKind::kWithholdVote ? pf.withhold_vote : pf.withhold_share) = true;
      parties.at(who)->SetFaults(pf);
      out.fault = {who, std::nullopt, std::nullopt};
      break;
    }
    case FaultKind::kDropOt: {
      if (holders.empty()) throw std::invalid_argument("no OT traffic to drop");
      PartyId who = pick(holders.back());
      bus.DropDirectTraffic(who);
      out.fault = {who, std::nullopt, std::nullopt};
      break;
    }
  }

  bus.Run();
  out.log = bus.log();
  out.timed_out = bus.timed_out();
  out.result = Finalize(out.log);
  out.assignment = dist.assignment();
  out.mask = dist.mask();
  out.masked = dist.masked_list();
  for (auto& [id, p] : parties) {
    out.counters[id] = p->counters();
    out.phases[id] = p->phase();
    if (p->received()) out.received.emplace(id, *p->received());
    if (cfg.IsVoter(id)) out.proofs[id] = p->ProveVote();
  }
  return out;
}

}  // namespace boardroom
