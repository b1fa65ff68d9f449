#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "boardroom/config.hpp"
#include "boardroom/messages.hpp"
#include "boardroom/transport.hpp"

namespace boardroom {

struct Flag {
  std::string code;
  std::optional<PartyId> party;
  std::optional<size_t> entry;
  std::string detail;
};

struct AbortRecord {
  PartyId party;
  AbortNoticeMsg notice;
};

// Public state of an election as seen from the broadcast log. Every party and
// every observer runs one; nothing in it is secret.
class ElectionView {
 public:
  explicit ElectionView(ElectionConfig config);

  const ElectionConfig& config() const { return config_; }

  // Verifies a broadcast envelope and applies it once its round gate is open;
  // earlier-arriving envelopes wait in a buffer. Rejections become flags.
  void Offer(const Envelope& env, size_t entry);
  void NoteOtDigest(const OtDigestRecord& record);

  bool RoundComplete(uint8_t round) const;
  // First incomplete round, or kRounds + 1.
  uint8_t open_round() const;
  bool complete() const { return open_round() > kRounds; }
  bool aborted() const { return !aborts_.empty(); }
  // Parties whose message for the open round has not been applied.
  std::vector<PartyId> Missing() const;

  std::vector<GroupElement> VoteAComponents() const;
  Digest ShareTarget() const;
  std::optional<AggregatePublicKey> AggregateKey() const;

  const std::map<PartyId, PublicShare>& keys() const { return keys_; }
  const std::optional<SetupCommitmentsMsg>& setup() const { return setup_; }
  const std::map<PartyId, Ciphertext>& votes() const { return votes_; }
  const std::optional<DecryptionShare>& distributor_share() const { return distributor_share_; }
  const std::map<PartyId, DecryptionShare>& voter_shares() const { return voter_shares_; }
  const std::optional<MaskedPrimeList>& masked() const { return masked_; }
  const std::set<PartyId>& acks() const { return acks_; }
  const std::map<PartyId, AllegationMsg>& allegations() const { return allegations_; }
  const std::optional<UnmaskRevealMsg>& unmask() const { return unmask_; }
  const std::vector<AbortRecord>& aborts() const { return aborts_; }
  const std::vector<Flag>& flags() const { return flags_; }
  const std::set<uint8_t>& rounds_seen() const { return rounds_seen_; }
  size_t ot_sessions() const { return ot_transfers_.size(); }
  size_t buffered() const { return pending_.size(); }
  // Envelopes applied so far, in application order.
  const std::vector<std::pair<size_t, MsgType>>& applied() const { return applied_; }

  // Responded in the audit round, by ack or allegation.
  bool Responded(PartyId id) const { return acks_.count(id) || allegations_.count(id); }

 private:
  struct Pending {
    Envelope env;
    ProtocolMessage msg;
    size_t entry;
  };

  bool Ready(const Pending& p) const;
  void Apply(const Pending& p);
  void Drain();
  void Reject(const std::string& code, const Envelope& env, size_t entry, std::string detail);

  ElectionConfig config_;
  std::map<PartyId, uint64_t> last_seq_;
  std::vector<Pending> pending_;

  std::map<PartyId, PublicShare> keys_;
  std::optional<SetupCommitmentsMsg> setup_;
  std::map<PartyId, Ciphertext> votes_;
  std::optional<DecryptionShare> distributor_share_;
  std::map<PartyId, DecryptionShare> voter_shares_;
  std::optional<MaskedPrimeList> masked_;
  std::set<PartyId> acks_;
  std::map<PartyId, AllegationMsg> allegations_;
  std::optional<UnmaskRevealMsg> unmask_;
  std::vector<AbortRecord> aborts_;
  std::vector<Flag> flags_;
  std::set<uint8_t> rounds_seen_;
  std::set<std::pair<PartyId, uint32_t>> ot_transfers_;
  std::vector<std::pair<size_t, MsgType>> applied_;
};

}  // namespace boardroom
