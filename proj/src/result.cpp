#include "boardroom/result.hpp"

#include <algorithm>

namespace boardroom {

namespace {

Json FlagJson(const Flag& f) {
  Json j{{"code", f.code}, {"detail", f.detail}};
  j["party"] = f.party ? Json(*f.party) : Json(nullptr);
  j["entry"] = f.entry ? Json(*f.entry) : Json(nullptr);
  return j;
}

PrimeTable TableFor(const ElectionConfig& c) {
  return c.primes ? TableFromPrimes(c.lambda, c.m, c.n, *c.primes, *c.group) : SelectPrimes(c.lambda, c.m, c.n, *c.group);
}

void AddFlag(TallyReport& r, const ElectionConfig& c, std::string code, std::string detail) {
  r.flags.push_back(Flag{std::move(code), c.distributor, std::nullopt, std::move(detail)});
}

// Checks both openings, the unmask element and the masked list. Returns the
// opened assignment and mask when everything matches.
std::optional<std::pair<PrimeAssignment, Mask>> AuditReveal(const ElectionView& view, TallyReport& r) {
  const auto& c = view.config();
  const auto& setup = *view.setup();
  const auto& reveal = *view.unmask();
  bool ok = true;

  bool mask_ok = VerifyCommitment(setup.mask, reveal.mask_opening);
  if (mask_ok) {
    try {
      ByteReader rd(reveal.mask_opening.payload);
      Scalar s = Scalar::Decode(c.group, rd.Field(c.group->element_bytes()));
      std::string id = rd.Str();
      rd.ExpectDone();
      mask_ok = s == reveal.s && id == c.election_id;
    } catch (const std::exception&) {
      mask_ok = false;
    }
  }
  r.audit["mask_opening"] = mask_ok;
  if (!mask_ok) AddFlag(r, c, "mask-opening-invalid", "mask commitment does not open to the revealed s");
  ok &= mask_ok;

  std::optional<PrimeAssignment> assignment;
  bool assign_ok = VerifyCommitment(setup.assignment, reveal.assignment_opening);
  if (assign_ok) {
    try {
      uint32_t lambda = 0, m = 0;
      std::string id;
      assignment = PrimeAssignment::Parse(reveal.assignment_opening.payload, &lambda, &m, &id);
      assign_ok = lambda == c.lambda && m == c.m && id == c.election_id && IsPermutationOf(*assignment, *r.table);
    } catch (const std::exception&) {
      assign_ok = false;
    }
  }
  r.audit["assignment_opening"] = assign_ok;
  if (!assign_ok) AddFlag(r, c, "assignment-opening-invalid", "assignment commitment does not open to a permutation");
  ok &= assign_ok;

  Mask mask = Mask::FromScalar(reveal.s);
  bool unmask_ok = UnmaskFactor(c.MaskedVotes(), mask) == reveal.unmask;
  r.audit["unmask"] = unmask_ok;
  if (!unmask_ok) AddFlag(r, c, "unmask-inconsistent", "published unmask factor differs from g^{-ks}");
  ok &= unmask_ok;

  bool list_ok = assign_ok && MaskAll(*assignment, mask) == *view.masked();
  r.audit["masked_list"] = list_ok;
  if (!list_ok) AddFlag(r, c, "masked-list-mismatch", "revealed masked list differs from the recomputed one");
  ok &= list_ok;

  if (!ok) return std::nullopt;
  return std::make_pair(std::move(*assignment), mask);
}

}  // namespace

TallyReport EvaluateTally(const ElectionView& view) {
  const auto& c = view.config();
  TallyReport r;
  r.flags = view.flags();
  r.table = TableFor(c);
  if (view.aborted()) {
    r.status = "aborted";
    return r;
  }
  if (!view.complete())
    throw IncompleteElection("election incomplete: round " + std::to_string(view.open_round()) +
                             " never closed");

  r.audit["no_allegations"] = view.allegations().empty();
  auto opened = AuditReveal(view, r);
  if (opened) r.assignment = opened->first;

  if (opened) {
    std::vector<Ciphertext> votes;
    for (const auto& [id, ct] : view.votes()) votes.push_back(ct);
    std::vector<DecryptionShare> shares;
    if (view.distributor_share()) shares.push_back(*view.distributor_share());
    for (const auto& [id, s] : view.voter_shares()) shares.push_back(s);
    try {
      auto product = ComputeProduct(votes, shares, view.unmask()->unmask, c.election_id);
      auto outcome = FactorTally(product, *r.table, c.n);
      if (auto* ev = std::get_if<ExponentVector>(&outcome)) {
        r.exponents = *ev;
        r.totals = CandidateTotals(*ev, *r.table, *r.assignment, CandidateBlockMap{c.lambda, c.m});
      } else {
        r.anomaly = std::get<AnomalyReport>(outcome);
      }
    } catch (const std::exception& e) {
      AddFlag(r, c, "product-failed", e.what());
    }
  }

  if (!view.allegations().empty())
    r.status = "halted";
  else if (!r.flags.empty())
    r.status = "flagged";
  else if (r.anomaly)
    r.status = "anomaly";
  else
    r.status = "ok";
  if (r.status != "ok") r.totals.reset();
  return r;
}

Bytes GenesisBody(const ElectionConfig& config) {
  std::string text = config.ToJson().dump();
  return Bytes(text.begin(), text.end());
}

ElectionConfig GenesisConfig(const BusLog& log) {
  if (log.entries().empty() || log.entries()[0].kind != EntryKind::kGenesis)
    throw IncompleteElection("log has no genesis entry");
  const Bytes& body = log.entries()[0].body;
  Json j;
  try {
    j = Json::parse(body.begin(), body.end());
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("genesis entry: ") + e.what());
  }
  auto c = ElectionConfig::FromJson(j);
  c.Validate();
  return c;
}

ElectionView ReplayView(const BusLog& log) {
  log.Verify();
  ElectionView view(GenesisConfig(log));
  const auto& entries = log.entries();
  for (size_t i = 1; i < entries.size(); ++i) {
    const auto& e = entries[i];
    switch (e.kind) {
      case EntryKind::kGenesis: throw ConfigError("second genesis entry at " + std::to_string(i));
      case EntryKind::kOtDigest:
        try {
          view.NoteOtDigest(OtDigestRecord::Decode(e.body));
        } catch (const DecodeError&) {
          throw DecodeError("malformed OT digest entry " + std::to_string(i));
        }
        break;
      case EntryKind::kEnvelope:
        try {
          view.Offer(Envelope::Decode(e.body), i);
        } catch (const DecodeError&) {
          throw DecodeError("malformed envelope entry " + std::to_string(i));
        }
        break;
    }
  }
  return view;
}

Json Finalize(const BusLog& log) {
  ElectionView view = ReplayView(log);
  const auto& c = view.config();
  TallyReport r = EvaluateTally(view);

  // Every vote must precede every share in log order.
  size_t last_vote = 0, first_share = SIZE_MAX;
  for (auto [entry, type] : view.applied()) {
    if (type == MsgType::kEncryptedVote) last_vote = std::max(last_vote, entry);
    if (type == MsgType::kDistributorShare || type == MsgType::kVoterShare) first_share = std::min(first_share, entry);
  }
  if (r.status != "aborted") r.audit["votes_precede_shares"] = last_vote < first_share;

  Json tally;
  tally["status"] = r.status;
  if (r.totals) {
    Json totals = Json::array();
    for (uint32_t i = 0; i < c.m; ++i)
      totals.push_back({{"candidate", i + 1}, {"name", c.candidates[i]}, {"votes", (*r.totals)[i]}});
    tally["totals"] = totals;
  } else {
    tally["totals"] = nullptr;
  }
  tally["primes"] = r.table->primes;
  tally["assignment"] = r.assignment ? Json(r.assignment->primes) : Json(nullptr);
  if (r.exponents) {
    tally["exponents"] = r.exponents->exponents;
    int64_t sum = 0;
    for (auto a : r.exponents->exponents) sum += a;
    tally["exponent_sum"] = sum;
    tally["residue"] = r.exponents->residue.get_str();
  } else {
    tally["exponents"] = nullptr;
    tally["exponent_sum"] = nullptr;
    tally["residue"] = nullptr;
  }
  if (r.anomaly) {
    Json a{{"kind", AnomalyKindName(r.anomaly->kind)},
           {"details", r.anomaly->details},
           {"partial_exponents", r.anomaly->partial_exponents},
           {"residue", r.anomaly->residue.get_str()}};
    a["reconstructed"] = r.anomaly->reconstructed ? Json(*r.anomaly->reconstructed) : Json(nullptr);
    tally["anomaly"] = a;
  } else {
    tally["anomaly"] = nullptr;
  }
  Json allegations = Json::array();
  for (const auto& [id, a] : view.allegations())
    allegations.push_back({{"voter", a.voter}, {"claim", a.claim}, {"received", ToHexString(a.received.value())}});
  tally["allegations"] = allegations;
  Json aborts = Json::array();
  for (const auto& ab : view.aborts())
    aborts.push_back({{"party", ab.party}, {"round", ab.notice.round}, {"missing", ab.notice.missing},
                      {"reason", ab.notice.reason}});
  tally["aborts"] = aborts;
  Json flags = Json::array();
  for (const auto& f : r.flags) flags.push_back(FlagJson(f));
  tally["flags"] = flags;
  tally["audit"] = r.audit;
  tally["counters"] = {{"broadcast_rounds", view.rounds_seen().size()}, {"ot_sessions", view.ot_sessions()}};

  Json chain = Json::array();
  for (const auto& e : log.entries()) chain.push_back(ToHex(e.digest));

  Json doc;
  doc["election_id"] = c.election_id;
  doc["config"] = {{"n", c.n},
                   {"m", c.m},
                   {"lambda", c.lambda},
                   {"ea_mode", c.ea_mode},
                   {"distributor", c.distributor},
                   {"candidates", c.candidates},
                   {"params", GroupToJson(*c.group)},
                   {"modulus_bits", c.group->bit_length()}};
  doc["tally"] = tally;
  doc["log"] = {{"entries", log.size()}, {"head", ToHex(log.head())}, {"chain", chain}};
  return doc;
}

int ResultExitCode(const Json& result) { return result.at("tally").at("status") == "ok" ? 0 : 1; }

}  // namespace boardroom
