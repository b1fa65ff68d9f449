#include "boardroom/party.hpp"

#include <algorithm>

namespace boardroom {

std::string_view PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kAwaitKeys: return "AwaitKeys";
    case Phase::kAwaitSetup: return "AwaitSetup";
    case Phase::kSelecting: return "Selecting";
    case Phase::kVoted: return "Voted";
    case Phase::kAwaitShares: return "AwaitShares";
    case Phase::kAwaitMapping: return "AwaitMapping";
    case Phase::kAwaitUnmask: return "AwaitUnmask";
    case Phase::kDone: return "Done";
    case Phase::kAborted: return "Aborted";
  }
  return "Unknown";
}

bool VerifyVoteProof(const Ciphertext& published, const VoteProof& proof, const AggregatePublicKey& key) {
  return MatchesEncryption(published, proof.plaintext, proof.randomness, key);
}

Party::Party(ElectionConfig config, PartyId self, SigningKey key, Rng rng)
    : config_(std::move(config)), self_(self), key_(std::move(key)), rng_(std::move(rng)), view_(config_) {
  if (!config_.Find(self_)) throw ConfigError("party " + std::to_string(self_) + " is not in the roster");
}

void Party::Emit(Json event) {
  if (events_) events_(event);
}

void Party::Broadcast(const ProtocolMessage& msg) {
  MsgType type = TypeOf(msg);
  uint8_t round = type == MsgType::kAbortNotice ? view_.open_round() : RoundOf(type);
  if (round > kRounds) round = kRounds;
  if (send_) send_(SignEnvelope(key_, config_.election_id, self_, ++seq_, round, std::nullopt, EncodeMessage(msg)));
}

void Party::Direct(PartyId to, Bytes payload) {
  if (send_) send_(SignEnvelope(key_, config_.election_id, self_, ++seq_, 0, to, std::move(payload)));
}

void Party::Start() {
  if (started_) return;
  started_ = true;
  if (config_.strict_lambda) {
    auto check = CheckLambdaPolicy(config_.lambda, config_.m, config_.n, config_.ea_mode);
    if (!check.ok) throw ConfigError("strict lambda policy: " + check.message);
  }
  if (config_.IsVoter(self_)) {
    ExpMeter meter(&counters_.core_exponentiations);
    Rng r = rng_.Fork("keygen");
    auto [d, pub] = Keygen(config_.group, r, self_);
    private_share_ = d;
    Broadcast(PublicKeyShareMsg{pub.value});
  }
  if (is_distributor()) SetupDistributor();
  Emit({{"type", "phase"}, {"phase", PhaseName(phase_)}, {"round", 1}});
  UpdatePhase();
}

void Party::SetupDistributor() {
  ExpMeter meter(&counters_.core_exponentiations);
  Rng r = rng_.Fork("setup");
  table_ = config_.primes ? TableFromPrimes(config_.lambda, config_.m, config_.n, *config_.primes, *config_.group)
                          : SelectPrimes(config_.lambda, config_.m, config_.n, *config_.group);
  assignment_ = RandomAssignment(*table_, r);
  mask_ = Mask::Draw(config_.group, r);
  masked_ = MaskAll(*assignment_, *mask_);
  auto [ca, oa] = Commit(assignment_->Serialize(config_.lambda, config_.m, config_.election_id), r);
  auto [cm, om] = Commit(mask_->Serialize(config_.election_id), r);
  assignment_opening_ = std::move(oa);
  mask_opening_ = std::move(om);
  Broadcast(SetupCommitmentsMsg{ca, cm});
}

void Party::Cast(uint32_t candidate) {
  if (!config_.IsVoter(self_)) throw CommandError("not-a-voter", "this party does not vote");
  if (candidate >= config_.m)
    throw CommandError("candidate-out-of-range", "candidate index " + std::to_string(candidate) + " out of range");
  if (candidate_) throw CommandError("already-cast", "a vote was already cast");
  if (finished()) throw CommandError("phase-closed", "election is over");
  candidate_ = candidate;
  Rng r = rng_.Fork("index");
  index_ = CandidateBlockMap{config_.lambda, config_.m}.FirstIndex(candidate) +
           static_cast<uint32_t>(r.Below(config_.lambda));
  Emit({{"type", "cast"}, {"candidate", candidate + 1}});
  Pump();
}

void Party::Allege(const std::string& claim) {
  if (!config_.IsMaskedHolder(self_)) throw CommandError("not-a-holder", "only masked-prime holders can allege");
  if (!view_.masked()) throw CommandError("mapping-not-revealed", "the masked list is not published yet");
  if (audit_sent_) throw CommandError("already-responded", "audit response already sent");
  SendAllegation(claim);
  Pump();
}

void Party::SendAllegation(const std::string& claim) {
  GroupElement got = received_ ? *received_ : GroupElement::One(config_.group);
  Broadcast(AllegationMsg{self_, claim, got});
  audit_sent_ = true;
}

void Party::OnBroadcast(const Envelope& env, size_t entry) {
  view_.Offer(env, entry);
  Emit({{"type", "envelope"},
        {"entry", entry},
        {"digest", ToHex(env.Hash())},
        {"sender", env.sender},
        {"round", env.round}});
  if (env.sender == self_ && vote_sent_ && !receipt_) {
    auto it = view_.votes().find(self_);
    if (it != view_.votes().end() && record_ && it->second == record_->ciphertext) {
      receipt_ = env.Hash();
      Emit({{"type", "receipt"}, {"entry", entry}, {"digest", ToHex(*receipt_)}});
    }
  }
  Pump();
}

void Party::OnDirect(const Envelope& env) {
  if (finished()) return;
  const PartyInfo* from = config_.Find(env.sender);
  if (!from || env.recipient != self_ || env.election_id != config_.election_id || !VerifyEnvelope(env, from->key)) {
    Emit({{"type", "error"}, {"code", "bad-direct"}, {"detail", "rejected direct message"}});
    return;
  }
  try {
    auto [session, phase] = PeekOtMessage(env.payload);
    if (is_distributor() && phase == OtPhase::kKeys) {
      auto it = senders_.find(env.sender);
      if (it == senders_.end() || session != env.sender) throw OtError("no OT session for this peer");
      ExpMeter meter(&counters_.ot_exponentiations);
      Bytes transfer = it->second->Respond(env.payload);
      ++counters_.ot_sessions;
      Direct(env.sender, std::move(transfer));
    } else if (!is_distributor() && env.sender == config_.distributor && session == self_) {
      if (phase == OtPhase::kSetup) {
        pending_setup_ = env.payload;
      } else if (phase == OtPhase::kTransfer && receiver_) {
        ExpMeter meter(&counters_.ot_exponentiations);
        Bytes got = receiver_->Finish(env.payload);
        received_ = GroupElement::Decode(config_.group, got);
      }
    } else {
      throw OtError("unexpected OT message");
    }
  } catch (const std::exception& e) {
    Emit({{"type", "error"}, {"code", "ot-failure"}, {"detail", e.what()}});
  }
  Pump();
}

void Party::OnTimeout() {
  if (finished()) return;
  auto missing = view_.Missing();
  Broadcast(AbortNoticeMsg{view_.open_round(), missing, "round timed out"});
  phase_ = Phase::kAborted;
  Emit({{"type", "phase"}, {"phase", PhaseName(phase_)}, {"round", view_.open_round()}, {"missing", missing}});
}

void Party::StartOtSessions() {
  if (ot_started_ || !is_distributor()) return;
  ot_started_ = true;
  ExpMeter meter(&counters_.ot_exponentiations);
  for (PartyId h : config_.MaskedHolders()) {
    std::vector<Bytes> strings;
    for (const auto& e : masked_) strings.push_back(e.Encode());
    if (auto f = faults_.serve_swap.find(h); f != faults_.serve_swap.end())
      std::swap(strings.at(f->second.first), strings.at(f->second.second));
    auto sender = std::make_unique<OtnSender>(config_.group, h, std::move(strings), rng_.Fork("ot/" + std::to_string(h)));
    Bytes setup = sender->Start();
    senders_[h] = std::move(sender);
    Direct(h, std::move(setup));
  }
}

void Party::MaybeAnswerSetup() {
  if (keys_answered_ || !pending_setup_ || !index_) return;
  keys_answered_ = true;
  ExpMeter meter(&counters_.ot_exponentiations);
  receiver_ = std::make_unique<OtnReceiver>(config_.group, self_, OtChoice::Make(*index_, config_.lambda * config_.m),
                                            rng_.Fork("ot/" + std::to_string(config_.distributor)));
  Direct(config_.distributor, receiver_->OnSetup(*pending_setup_));
}

void Party::MaybeVote() {
  if (vote_sent_ || faults_.withhold_vote || !config_.IsVoter(self_) || !index_) return;
  auto key = view_.AggregateKey();
  if (!key || !view_.setup()) return;
  std::optional<GroupElement> plaintext;
  if (is_distributor()) {
    plaintext = GroupElement::FromInteger(config_.group, static_cast<unsigned long>(assignment_->primes[*index_]));
  } else if (received_) {
    plaintext = *received_;
    if (faults_.negative_vote_leak)
      plaintext = ModDiv(ModMul(*received_, *received_), *faults_.negative_vote_leak);
  }
  if (!plaintext) return;
  ExpMeter meter(&counters_.core_exponentiations);
  Rng r = rng_.Fork("vote");
  record_ = Encrypt(*plaintext, *key, r);
  vote_sent_ = true;
  Broadcast(EncryptedVoteMsg{record_->ciphertext});
}

void Party::MaybeShare() {
  if (share_sent_ || faults_.withhold_share || !private_share_ || !view_.RoundComplete(2)) return;
  bool distributor_share = is_distributor() && !config_.ea_mode;
  if (!distributor_share && !config_.ea_mode && !view_.distributor_share()) return;
  ExpMeter meter(&counters_.core_exponentiations);
  DecryptionShare share = ShareForProduct(view_.VoteAComponents(), *private_share_, config_.election_id);
  share_sent_ = true;
  if (distributor_share)
    Broadcast(DistributorShareMsg{share});
  else
    Broadcast(VoterShareMsg{share});
}

void Party::MaybeAudit() {
  if (audit_sent_ || !config_.IsMaskedHolder(self_) || !view_.masked() || !index_) return;
  if (!verdict_) {
    const auto& list = *view_.masked();
    bool in_block = CandidateBlockMap{config_.lambda, config_.m}.CandidateOf(*index_) == *candidate_;
    verdict_ = received_ && in_block && list.at(*index_) == *received_;
    Emit({{"type", "verdict"},
          {"check", "received-prime"},
          {"ok", *verdict_},
          {"detail", *verdict_ ? "received masked prime matches the published list"
                               : "received masked prime differs from the published list"}});
  }
  if (*verdict_) {
    Broadcast(AuditAckMsg{MaskedListDigest(*view_.masked())});
    audit_sent_ = true;
  } else if (!hold_audit_) {
    SendAllegation("received masked prime does not match the published entry for my index");
  }
}

void Party::Finish() {
  if (report_) return;
  ExpMeter meter(&counters_.audit_exponentiations);
  report_ = EvaluateTally(view_);
  Json totals = nullptr;
  if (report_->totals) {
    totals = Json::array();
    for (uint32_t i = 0; i < config_.m; ++i)
      totals.push_back({{"candidate", i + 1}, {"name", config_.candidates[i]}, {"votes", (*report_->totals)[i]}});
  }
  Emit({{"type", "totals"}, {"status", report_->status}, {"totals", totals}, {"audit", report_->audit}});
}

void Party::Pump() {
  if (finished() || !started_) return;
  if (view_.aborted()) {
    phase_ = Phase::kAborted;
    Emit({{"type", "phase"}, {"phase", PhaseName(phase_)}, {"round", view_.open_round()}});
    return;
  }
  if (view_.RoundComplete(1)) {
    StartOtSessions();
    MaybeAnswerSetup();
    MaybeVote();
  }
  if (view_.RoundComplete(2)) MaybeShare();
  if (view_.RoundComplete(3) && is_distributor() && !mapping_sent_) {
    MaskedPrimeList list = masked_;
    if (faults_.mapping_swap) std::swap(list.at(faults_.mapping_swap->first), list.at(faults_.mapping_swap->second));
    mapping_sent_ = true;
    Broadcast(MappingRevealMsg{list});
  }
  MaybeAudit();
  if (view_.RoundComplete(4) && is_distributor() && !unmask_sent_) {
    ExpMeter meter(&counters_.core_exponentiations);
    unmask_sent_ = true;
    Broadcast(UnmaskRevealMsg{UnmaskFactor(config_.MaskedVotes(), *mask_), mask_->s, *mask_opening_,
                              *assignment_opening_});
  }
  if (view_.complete()) Finish();
  UpdatePhase();
}

void Party::UpdatePhase() {
  if (phase_ == Phase::kAborted) return;
  Phase next;
  switch (view_.open_round()) {
    case 1: next = view_.keys().size() == config_.n ? Phase::kAwaitSetup : Phase::kAwaitKeys; break;
    case 2: next = vote_sent_ ? Phase::kVoted : Phase::kSelecting; break;
    case 3: next = Phase::kAwaitShares; break;
    case 4: next = Phase::kAwaitMapping; break;
    case 5: next = Phase::kAwaitUnmask; break;
    default: next = Phase::kDone; break;
  }
  if (next == phase_) return;
  phase_ = next;
  Emit({{"type", "phase"}, {"phase", PhaseName(phase_)}, {"round", std::min<int>(view_.open_round(), kRounds)}});
}

std::optional<VoteProof> Party::ProveVote() const {
  if (!record_) return std::nullopt;
  return VoteProof{record_->plaintext, record_->randomness};
}

}  // namespace boardroom
