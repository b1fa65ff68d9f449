#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boardroom/ballot.hpp"
#include "boardroom/commitment.hpp"
#include "boardroom/config.hpp"
#include "boardroom/ot.hpp"
#include "boardroom/result.hpp"
#include "boardroom/transport.hpp"
#include "boardroom/view.hpp"

namespace boardroom {

enum class Phase {
  kAwaitKeys,
  kAwaitSetup,
  kSelecting,
  kVoted,
  kAwaitShares,
  kAwaitMapping,
  kAwaitUnmask,
  kDone,
  kAborted,
};
std::string_view PhaseName(Phase phase);

// A rejected user command; code is a short machine-readable tag.
class CommandError : public std::runtime_error {
 public:
  CommandError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Deliberate misbehaviour, for fault-injection runs only.
struct PartyFaults {
  // Voter: encrypts received^2 / leaked instead of the received masked prime.
  std::optional<GroupElement> negative_vote_leak;
  // Distributor: swaps two OT strings in the session served to a voter.
  std::map<PartyId, std::pair<uint32_t, uint32_t>> serve_swap;
  // Distributor: swaps two entries of the published masked list.
  std::optional<std::pair<uint32_t, uint32_t>> mapping_swap;
  bool withhold_vote = false;
  bool withhold_share = false;
};

struct PartyCounters {
  uint64_t core_exponentiations = 0;
  uint64_t ot_exponentiations = 0;
  uint64_t audit_exponentiations = 0;
  uint32_t ot_sessions = 0;
};

// Opening of a cast vote; anyone can re-encrypt and compare.
struct VoteProof {
  GroupElement plaintext;
  Scalar randomness;
};
bool VerifyVoteProof(const Ciphertext& published, const VoteProof& proof, const AggregatePublicKey& key);

// One voter (or the distributor), driven by verified broadcasts, direct OT
// messages, user commands and timeouts. Single-threaded.
class Party {
 public:
  using SendFn = std::function<void(Envelope)>;
  using EventFn = std::function<void(const Json&)>;

  Party(ElectionConfig config, PartyId self, SigningKey key, Rng rng);

  void SetSender(SendFn send) { send_ = std::move(send); }
  void SetEvents(EventFn events) { events_ = std::move(events); }
  void SetFaults(PartyFaults faults) { faults_ = std::move(faults); }
  // Wait for an explicit Allege command when the receipt check fails.
  void SetHoldAudit(bool hold) { hold_audit_ = hold; }

  // Round 1 broadcasts. Throws ConfigError on a strict-policy violation.
  void Start();
  void Cast(uint32_t candidate);
  void Allege(const std::string& claim);

  void OnBroadcast(const Envelope& env, size_t entry);
  void OnDirect(const Envelope& env);
  void OnOtDigest(const OtDigestRecord& record) { view_.NoteOtDigest(record); }
  // The open round stalled; broadcasts an AbortNotice naming who is missing.
  void OnTimeout();

  PartyId id() const { return self_; }
  Phase phase() const { return phase_; }
  bool finished() const { return phase_ == Phase::kDone || phase_ == Phase::kAborted; }
  const ElectionView& view() const { return view_; }
  const ElectionConfig& config() const { return config_; }
  const PartyCounters& counters() const { return counters_; }
  const std::optional<TallyReport>& report() const { return report_; }
  bool is_distributor() const { return self_ == config_.distributor; }

  std::optional<uint32_t> chosen_candidate() const { return candidate_; }
  std::optional<uint32_t> chosen_index() const { return index_; }
  const std::optional<GroupElement>& received() const { return received_; }
  std::optional<VoteProof> ProveVote() const;
  std::optional<Digest> receipt() const { return receipt_; }

  // Distributor secrets, exposed for harness ground truth and demos.
  const std::optional<PrimeAssignment>& assignment() const { return assignment_; }
  const std::optional<Mask>& mask() const { return mask_; }
  const MaskedPrimeList& masked_list() const { return masked_; }

 private:
  void Pump();
  void Broadcast(const ProtocolMessage& msg);
  void Direct(PartyId to, Bytes payload);
  void Emit(Json event);
  void UpdatePhase();
  void SetupDistributor();
  void StartOtSessions();
  void MaybeAnswerSetup();
  void MaybeVote();
  void MaybeShare();
  void MaybeAudit();
  void SendAllegation(const std::string& claim);
  void Finish();

  ElectionConfig config_;
  PartyId self_;
  SigningKey key_;
  Rng rng_;
  ElectionView view_;
  SendFn send_;
  EventFn events_;
  PartyFaults faults_;
  bool hold_audit_ = false;
  uint64_t seq_ = 0;
  Phase phase_ = Phase::kAwaitKeys;
  PartyCounters counters_;

  std::optional<PrivateShare> private_share_;
  std::optional<uint32_t> candidate_;
  std::optional<uint32_t> index_;
  std::optional<Bytes> pending_setup_;
  std::unique_ptr<OtnReceiver> receiver_;
  std::optional<GroupElement> received_;
  std::optional<EncryptionRecord> record_;
  std::optional<Digest> receipt_;
  std::optional<bool> verdict_;
  bool started_ = false;
  bool keys_answered_ = false;
  bool vote_sent_ = false;
  bool share_sent_ = false;
  bool audit_sent_ = false;
  std::optional<TallyReport> report_;

  // Distributor.
  std::optional<PrimeTable> table_;
  std::optional<PrimeAssignment> assignment_;
  std::optional<Mask> mask_;
  MaskedPrimeList masked_;
  std::optional<CommitmentOpening> assignment_opening_;
  std::optional<CommitmentOpening> mask_opening_;
  std::map<PartyId, std::unique_ptr<OtnSender>> senders_;
  bool ot_started_ = false;
  bool mapping_sent_ = false;
  bool unmask_sent_ = false;
};

}  // namespace boardroom
