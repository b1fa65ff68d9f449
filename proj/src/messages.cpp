#include "boardroom/messages.hpp"

#include <type_traits>

namespace boardroom {

namespace {

template <class>
inline constexpr bool kAlwaysFalse = false;

constexpr size_t kMaxList = 1u << 16;

void PutElement(ByteWriter& w, const GroupElement& e) { w.Field(e.Encode()); }

GroupElement GetElement(const GroupPtr& g, ByteReader& r) {
  Bytes b = r.Field(g->element_bytes());
  return GroupElement::Decode(g, b);
}

void PutOpening(ByteWriter& w, const CommitmentOpening& o) { w.Field(o.payload).Raw(o.nonce); }

CommitmentOpening GetOpening(ByteReader& r) {
  CommitmentOpening o;
  o.payload = r.Field();
  auto n = r.Raw(o.nonce.size());
  std::copy(n.begin(), n.end(), o.nonce.begin());
  return o;
}

Digest GetDigest(ByteReader& r) {
  Digest d;
  auto raw = r.Raw(d.size());
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

}  // namespace

MsgType TypeOf(const ProtocolMessage& msg) { return static_cast<MsgType>(msg.index() + 1); }

std::string_view MsgTypeName(MsgType type) {
  switch (type) {
    case MsgType::kPublicKeyShare: return "PublicKeyShare";
    case MsgType::kSetupCommitments: return "SetupCommitments";
    case MsgType::kEncryptedVote: return "EncryptedVote";
    case MsgType::kDistributorShare: return "DistributorShare";
    case MsgType::kVoterShare: return "VoterShare";
    case MsgType::kMappingReveal: return "MappingReveal";
    case MsgType::kAuditAck: return "AuditAck";
    case MsgType::kAllegation: return "Allegation";
    case MsgType::kUnmaskReveal: return "UnmaskReveal";
    case MsgType::kAbortNotice: return "AbortNotice";
  }
  return "Unknown";
}

uint8_t RoundOf(MsgType type) {
  switch (type) {
    case MsgType::kPublicKeyShare:
    case MsgType::kSetupCommitments: return 1;
    case MsgType::kEncryptedVote: return 2;
    case MsgType::kDistributorShare:
    case MsgType::kVoterShare: return 3;
    case MsgType::kMappingReveal:
    case MsgType::kAuditAck:
    case MsgType::kAllegation: return 4;
    case MsgType::kUnmaskReveal: return 5;
    case MsgType::kAbortNotice: return 0;
  }
  return 0;
}

Bytes EncodeMessage(const ProtocolMessage& msg) {
  ByteWriter w;
  w.U8(static_cast<uint8_t>(TypeOf(msg)));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PublicKeyShareMsg>) {
          PutElement(w, m.value);
        } else if constexpr (std::is_same_v<T, SetupCommitmentsMsg>) {
          w.Raw(m.assignment.digest).Raw(m.mask.digest);
        } else if constexpr (std::is_same_v<T, EncryptedVoteMsg>) {
          w.Raw(m.ciphertext.Encode());
        } else if constexpr (std::is_same_v<T, DistributorShareMsg> || std::is_same_v<T, VoterShareMsg>) {
          w.Raw(m.share.Encode());
        } else if constexpr (std::is_same_v<T, MappingRevealMsg>) {
          w.U32(static_cast<uint32_t>(m.masked.size()));
          for (const auto& e : m.masked) PutElement(w, e);
        } else if constexpr (std::is_same_v<T, AuditAckMsg>) {
          w.Raw(m.list_digest);
        } else if constexpr (std::is_same_v<T, AllegationMsg>) {
          w.U32(m.voter).Str(m.claim);
          PutElement(w, m.received);
        } else if constexpr (std::is_same_v<T, UnmaskRevealMsg>) {
          PutElement(w, m.unmask);
          w.Field(m.s.Encode());
          PutOpening(w, m.mask_opening);
          PutOpening(w, m.assignment_opening);
        } else if constexpr (std::is_same_v<T, AbortNoticeMsg>) {
          w.U32(m.round).U32(static_cast<uint32_t>(m.missing.size()));
          for (auto p : m.missing) w.U32(p);
          w.Str(m.reason);
        } else {
          static_assert(kAlwaysFalse<T>);
        }
      },
      msg);
  return std::move(w).Take();
}

ProtocolMessage DecodeMessage(const GroupPtr& group, ByteSpan bytes) {
  ByteReader r(bytes);
  auto type = static_cast<MsgType>(r.U8());
  ProtocolMessage out = AbortNoticeMsg{};
  switch (type) {
    case MsgType::kPublicKeyShare: out = PublicKeyShareMsg{GetElement(group, r)}; break;
    case MsgType::kSetupCommitments: {
      SetupCommitmentsMsg m;
      m.assignment.digest = GetDigest(r);
      m.mask.digest = GetDigest(r);
      out = m;
      break;
    }
    case MsgType::kEncryptedVote: out = EncryptedVoteMsg{Ciphertext::Decode(group, r)}; break;
    case MsgType::kDistributorShare: out = DistributorShareMsg{DecryptionShare::Decode(group, r)}; break;
    case MsgType::kVoterShare: out = VoterShareMsg{DecryptionShare::Decode(group, r)}; break;
    case MsgType::kMappingReveal: {
      uint32_t count = r.U32();
      if (count > kMaxList) throw DecodeError("masked list too long");
      MappingRevealMsg m;
      for (uint32_t i = 0; i < count; ++i) m.masked.push_back(GetElement(group, r));
      out = std::move(m);
      break;
    }
    case MsgType::kAuditAck: out = AuditAckMsg{GetDigest(r)}; break;
    case MsgType::kAllegation: {
      PartyId voter = r.U32();
      std::string claim = r.Str(4096);
      out = AllegationMsg{voter, std::move(claim), GetElement(group, r)};
      break;
    }
    case MsgType::kUnmaskReveal: {
      GroupElement unmask = GetElement(group, r);
      Scalar s = Scalar::Decode(group, r.Field(group->element_bytes()));
      CommitmentOpening mask_opening = GetOpening(r);
      CommitmentOpening assignment_opening = GetOpening(r);
      out = UnmaskRevealMsg{unmask, s, std::move(mask_opening), std::move(assignment_opening)};
      break;
    }
    case MsgType::kAbortNotice: {
      AbortNoticeMsg m;
      m.round = r.U32();
      uint32_t count = r.U32();
      if (count > kMaxList) throw DecodeError("missing list too long");
      for (uint32_t i = 0; i < count; ++i) m.missing.push_back(r.U32());
      m.reason = r.Str(4096);
      out = std::move(m);
      break;
    }
    default: throw DecodeError("unknown message type " + std::to_string(static_cast<int>(type)));
  }
  r.ExpectDone();
  return out;
}

Digest MaskedListDigest(const MaskedPrimeList& list) {
  Sha256Hasher h;
  h.Update(std::string_view("boardroom/masked-list/v1"));
  for (const auto& e : list) h.Update(e.Encode());
  return h.Final();
}

}  // namespace boardroom
