#include "boardroom/view.hpp"

#include <algorithm>
#include <type_traits>

#include "boardroom/ot.hpp"

namespace boardroom {

ElectionView::ElectionView(ElectionConfig config) : config_(std::move(config)) {}

void ElectionView::Reject(const std::string& code, const Envelope& env, size_t entry, std::string detail) {
  flags_.push_back(Flag{code, env.sender, entry, std::move(detail)});
}

void ElectionView::Offer(const Envelope& env, size_t entry) {
  if (env.election_id != config_.election_id) return Reject("wrong-election", env, entry, env.election_id);
  if (env.recipient) return Reject("direct-on-broadcast", env, entry, "");
  const PartyInfo* sender = config_.Find(env.sender);
  if (!sender) return Reject("unknown-sender", env, entry, "");
  if (!VerifyEnvelope(env, sender->key)) return Reject("bad-signature", env, entry, "");
  auto last = last_seq_.find(env.sender);
  if (last != last_seq_.end() && env.seq <= last->second)
    return Reject("replayed-sequence", env, entry, "seq " + std::to_string(env.seq));
  last_seq_[env.sender] = env.seq;

  std::optional<ProtocolMessage> msg;
  try {
    msg = DecodeMessage(config_.group, env.payload);
  } catch (const std::exception& e) {
    return Reject("malformed-message", env, entry, e.what());
  }
  MsgType type = TypeOf(*msg);
  if (type != MsgType::kAbortNotice && env.round != RoundOf(type))
    return Reject("wrong-round-tag", env, entry, std::string(MsgTypeName(type)));

  Pending p{env, std::move(*msg), entry};
  if (Ready(p)) {
    Apply(p);
    Drain();
  } else {
    pending_.push_back(std::move(p));
  }
}

void ElectionView::NoteOtDigest(const OtDigestRecord& record) {
  if (record.from == config_.distributor && config_.IsMaskedHolder(record.to) &&
      record.phase == static_cast<uint8_t>(OtPhase::kTransfer))
    ot_transfers_.insert({record.to, record.session});
}

bool ElectionView::Ready(const Pending& p) const {
  MsgType type = TypeOf(p.msg);
  if (type == MsgType::kAbortNotice) return true;
  if (RoundOf(type) > open_round()) return false;
  if (type == MsgType::kVoterShare && !config_.ea_mode && !distributor_share_) return false;
  if ((type == MsgType::kAuditAck || type == MsgType::kAllegation) && !masked_) return false;
  return true;
}

void ElectionView::Drain() {
  bool progress = true;
  while (progress) {
    progress = false;
    for (size_t i = 0; i < pending_.size(); ++i) {
      if (!Ready(pending_[i])) continue;
      Pending p = std::move(pending_[i]);
      pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(i));
      Apply(p);
      progress = true;
      break;
    }
  }
}

void ElectionView::Apply(const Pending& p) {
  const Envelope& env = p.env;
  const PartyId from = env.sender;
  const bool is_distributor = from == config_.distributor;
  auto reject = [&](const std::string& code, std::string detail = "") { Reject(code, env, p.entry, std::move(detail)); };
  bool accepted = true;
  auto fail = [&](const std::string& code, std::string detail = "") {
    reject(code, std::move(detail));
    accepted = false;
  };

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PublicKeyShareMsg>) {
          if (!config_.IsVoter(from)) return fail("unexpected-sender", "PublicKeyShare");
          if (keys_.count(from)) return fail("duplicate-key");
          keys_.emplace(from, PublicShare{m.value, from});
        } else if constexpr (std::is_same_v<T, SetupCommitmentsMsg>) {
          if (!is_distributor) return fail("unexpected-sender", "SetupCommitments");
          if (setup_) return fail("duplicate-setup");
          setup_ = m;
        } else if constexpr (std::is_same_v<T, EncryptedVoteMsg>) {
          if (!config_.IsVoter(from)) return fail("unexpected-sender", "EncryptedVote");
          if (votes_.count(from)) return fail("duplicate-vote");
          votes_.emplace(from, m.ciphertext);
        } else if constexpr (std::is_same_v<T, DistributorShareMsg>) {
          if (config_.ea_mode || !is_distributor || m.share.owner != from)
            return fail("unexpected-sender", "DistributorShare");
          if (distributor_share_) return fail("duplicate-share");
          if (!DigestEquals(m.share.target, ShareTarget())) return fail("share-target-mismatch");
          distributor_share_ = m.share;
        } else if constexpr (std::is_same_v<T, VoterShareMsg>) {
          if (!config_.IsVoter(from) || (!config_.ea_mode && is_distributor) || m.share.owner != from)
            return fail("unexpected-sender", "VoterShare");
          if (voter_shares_.count(from)) return fail("duplicate-share");
          if (!DigestEquals(m.share.target, ShareTarget())) return fail("share-target-mismatch");
          voter_shares_.emplace(from, m.share);
        } else if constexpr (std::is_same_v<T, MappingRevealMsg>) {
          if (!is_distributor) return fail("unexpected-sender", "MappingReveal");
          if (masked_) return fail("duplicate-mapping");
          if (m.masked.size() != static_cast<size_t>(config_.lambda) * config_.m)
            return fail("bad-mapping-size");
          masked_ = m.masked;
        } else if constexpr (std::is_same_v<T, AuditAckMsg>) {
          if (!config_.IsMaskedHolder(from)) return fail("unexpected-sender", "AuditAck");
          if (Responded(from)) return fail("duplicate-audit-response");
          acks_.insert(from);
          if (!DigestEquals(m.list_digest, MaskedListDigest(*masked_))) reject("ack-digest-mismatch");
        } else if constexpr (std::is_same_v<T, AllegationMsg>) {
          if (!config_.IsMaskedHolder(from) || m.voter != from)
            return fail("unexpected-sender", "Allegation");
          if (Responded(from)) return fail("duplicate-audit-response");
          allegations_.emplace(from, m);
        } else if constexpr (std::is_same_v<T, UnmaskRevealMsg>) {
          if (!is_distributor) return fail("unexpected-sender", "UnmaskReveal");
          if (unmask_) return fail("duplicate-unmask");
          unmask_ = m;
        } else if constexpr (std::is_same_v<T, AbortNoticeMsg>) {
          aborts_.push_back(AbortRecord{from, m});
        }
      },
      p.msg);

  if (!accepted) return;
  MsgType type = TypeOf(p.msg);
  if (type != MsgType::kAbortNotice) rounds_seen_.insert(env.round);
  applied_.emplace_back(p.entry, type);
}

bool ElectionView::RoundComplete(uint8_t round) const {
  switch (round) {
    case 1: return setup_ && keys_.size() == config_.n;
    case 2: return RoundComplete(1) && votes_.size() == config_.n;
    case 3:
      return RoundComplete(2) && (config_.ea_mode || distributor_share_) &&
             voter_shares_.size() == config_.MaskedHolders().size();
    case 4: {
      if (!RoundComplete(3) || !masked_) return false;
      for (PartyId id : config_.MaskedHolders())
        if (!Responded(id)) return false;
      return true;
    }
    case 5: return RoundComplete(4) && unmask_;
    default: return false;
  }
}

uint8_t ElectionView::open_round() const {
  for (uint8_t r = 1; r <= kRounds; ++r)
    if (!RoundComplete(r)) return r;
  return kRounds + 1;
}

std::vector<PartyId> ElectionView::Missing() const {
  std::vector<PartyId> out;
  const PartyId d = config_.distributor;
  switch (open_round()) {
    case 1:
      if (!setup_) out.push_back(d);
      for (PartyId id : config_.Voters())
        if (!keys_.count(id)) out.push_back(id);
      break;
    case 2:
      for (PartyId id : config_.Voters())
        if (!votes_.count(id)) out.push_back(id);
      break;
    case 3:
      if (!config_.ea_mode && !distributor_share_) out.push_back(d);
      for (PartyId id : config_.MaskedHolders())
        if (!voter_shares_.count(id)) out.push_back(id);
      break;
    case 4:
      if (!masked_) out.push_back(d);
      for (PartyId id : config_.MaskedHolders())
        if (!Responded(id)) out.push_back(id);
      break;
    case 5: out.push_back(d); break;
    default: break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<GroupElement> ElectionView::VoteAComponents() const {
  std::vector<GroupElement> out;
  for (const auto& [id, ct] : votes_) out.push_back(ct.a);
  return out;
}

Digest ElectionView::ShareTarget() const { return ProductTarget(VoteAComponents(), config_.election_id); }

std::optional<AggregatePublicKey> ElectionView::AggregateKey() const {
  if (keys_.size() != config_.n) return std::nullopt;
  std::vector<PublicShare> shares;
  for (const auto& [id, s] : keys_) shares.push_back(s);
  return Aggregate(shares);
}

}  // namespace boardroom
