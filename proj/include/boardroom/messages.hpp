#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "boardroom/ballot.hpp"
#include "boardroom/commitment.hpp"
#include "boardroom/elgamal.hpp"

namespace boardroom {

enum class MsgType : uint8_t {
  kPublicKeyShare = 1,
  kSetupCommitments = 2,
  kEncryptedVote = 3,
  kDistributorShare = 4,
  kVoterShare = 5,
  kMappingReveal = 6,
  kAuditAck = 7,
  kAllegation = 8,
  kUnmaskReveal = 9,
  kAbortNotice = 10,
};

struct PublicKeyShareMsg {
  GroupElement value;
};

struct SetupCommitmentsMsg {
  Commitment assignment;
  Commitment mask;
};

struct EncryptedVoteMsg {
  Ciphertext ciphertext;
};

struct DistributorShareMsg {
  DecryptionShare share;
};

struct VoterShareMsg {
  DecryptionShare share;
};

// Masked list only; the assignment opening waits for the unmask round.
struct MappingRevealMsg {
  MaskedPrimeList masked;
};

struct AuditAckMsg {
  Digest list_digest;
};

struct AllegationMsg {
  PartyId voter;
  std::string claim;
  GroupElement received;
};

struct UnmaskRevealMsg {
  GroupElement unmask;
  Scalar s;
  CommitmentOpening mask_opening;
  CommitmentOpening assignment_opening;
};

struct AbortNoticeMsg {
  uint32_t round;
  std::vector<PartyId> missing;
  std::string reason;
};

using ProtocolMessage =
    std::variant<PublicKeyShareMsg, SetupCommitmentsMsg, EncryptedVoteMsg, DistributorShareMsg, VoterShareMsg,
                 MappingRevealMsg, AuditAckMsg, AllegationMsg, UnmaskRevealMsg, AbortNoticeMsg>;

inline constexpr uint8_t kRounds = 5;

MsgType TypeOf(const ProtocolMessage& msg);
std::string_view MsgTypeName(MsgType type);
// Broadcast round a message type belongs to; AbortNotice returns 0 (any round).
uint8_t RoundOf(MsgType type);

Bytes EncodeMessage(const ProtocolMessage& msg);
// Throws DecodeError on malformed bytes or out-of-range group values.
ProtocolMessage DecodeMessage(const GroupPtr& group, ByteSpan bytes);

Digest MaskedListDigest(const MaskedPrimeList& list);

}  // namespace boardroom
