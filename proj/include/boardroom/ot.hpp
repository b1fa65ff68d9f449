#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "boardroom/bytes.hpp"
#include "boardroom/crypto.hpp"
#include "boardroom/group.hpp"

namespace boardroom {

class OtError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr size_t kMaxOtStringBytes = 4096;

struct OtChoice {
  uint32_t index;
  uint32_t count;

  // Throws std::invalid_argument unless index < count.
  static OtChoice Make(uint32_t index, uint32_t count);
};

// Base 1-out-of-2 OT. The sender publishes a random c; the receiver sends one
// key pk0 and the sender derives pk1 = c / pk0, so the receiver can hold the
// discrete log of at most one of them.
struct OtSenderSetup {
  GroupElement c;
  uint32_t instance_id;
};

struct OtReceiverKeys {
  GroupElement pk0;
  uint32_t instance_id;
};

struct OtBranch {
  GroupElement g_y;
  Bytes blob;  // ciphertext || 32-byte tag
};

struct OtPayload {
  uint32_t instance_id;
  std::array<OtBranch, 2> branches;
};

OtSenderSetup Ot2SenderSetup(const GroupPtr& group, uint32_t instance_id, Rng& rng);

// Returns the keys to send and the private exponent k with pk_bit = g^k.
std::pair<OtReceiverKeys, Scalar> Ot2ReceiverChoose(const OtSenderSetup& setup, int bit, Rng& rng);
OtReceiverKeys Ot2ReceiverChooseWith(const OtSenderSetup& setup, int bit, const Scalar& k);

// pk_b for either branch as the sender sees it.
GroupElement Ot2SenderKey(const OtSenderSetup& setup, const OtReceiverKeys& keys, int branch);

// Strings are padded to equal length; each is at most kMaxOtStringBytes.
OtPayload Ot2SenderTransfer(const OtSenderSetup& setup, const OtReceiverKeys& keys, ByteSpan s0,
                            ByteSpan s1, Rng& rng);

// Authenticated open of one branch with exponent k; nullopt on tag failure.
std::optional<Bytes> Ot2TryOpen(const OtPayload& payload, int branch, const Scalar& k);
// Throws OtError when the chosen branch does not authenticate.
Bytes Ot2ReceiverRecover(const OtPayload& payload, int bit, const Scalar& k);

// Authenticated symmetric layer shared by both OT flavours: SHA-256 counter
// keystream with an HMAC-SHA256 tag, keys derived from a 32-byte secret.
Bytes SealBlob(const Digest& secret, ByteSpan context, ByteSpan plaintext);
std::optional<Bytes> OpenBlob(const Digest& secret, ByteSpan context, ByteSpan blob);

// Number of base OTs for N strings: ceil(log2 N).
uint32_t OtLevels(uint32_t count);

enum class OtPhase : uint8_t { kSetup = 1, kKeys = 2, kTransfer = 3 };

// Reads the session id and phase tag from any OT^N message.
std::pair<uint32_t, OtPhase> PeekOtMessage(ByteSpan message);

// Sender side of 1-out-of-N OT over ceil(log2 N) base OTs (key tree).
class OtnSender {
 public:
  OtnSender(GroupPtr group, uint32_t session_id, std::vector<Bytes> strings, Rng rng);

  Bytes Start();
  Bytes Respond(ByteSpan keys_message);

  uint32_t session_id() const { return session_id_; }
  uint32_t levels() const { return levels_; }

 private:
  GroupPtr group_;
  uint32_t session_id_;
  std::vector<Bytes> strings_;
  Rng rng_;
  uint32_t levels_;
  size_t padded_len_;
  std::vector<std::array<Digest, 2>> level_keys_;
  std::vector<OtSenderSetup> setups_;
  bool started_ = false;
  bool responded_ = false;
};

class OtnReceiver {
 public:
  OtnReceiver(GroupPtr group, uint32_t session_id, OtChoice choice, Rng rng);

  // Test hook: fixes the per-level exponents instead of drawing them.
  void UseExponents(std::vector<Scalar> exponents);

  Bytes OnSetup(ByteSpan setup_message);
  // Returns the chosen string; throws OtError on any authentication failure.
  Bytes Finish(ByteSpan transfer_message);

  // Attempts every blob of a transfer message with the key material this
  // receiver legitimately holds. Index i is set only if blob i authenticates.
  std::vector<std::optional<Bytes>> TryAllBlobs(ByteSpan transfer_message) const;
  // Attempts the non-chosen branch of every base OT with the held exponents.
  size_t CountOpenableForeignBranches(ByteSpan transfer_message) const;

  const OtChoice& choice() const { return choice_; }

 private:
  struct Transfer;
  Transfer Parse(ByteSpan transfer_message) const;

  GroupPtr group_;
  uint32_t session_id_;
  OtChoice choice_;
  Rng rng_;
  uint32_t levels_ = 0;
  size_t padded_len_ = 0;
  std::vector<Scalar> exponents_;
  std::vector<OtSenderSetup> setups_;
  bool set_up_ = false;
};

// Both sides in one place, messages passed through `transcript` when given.
struct OtTranscript {
  std::vector<Bytes> sender_messages;
  std::vector<Bytes> receiver_messages;
};

Bytes OtnRun(const GroupPtr& group, std::span<const Bytes> sender_strings, OtChoice choice,
             Rng& sender_rng, Rng& receiver_rng, OtTranscript* transcript = nullptr);

}  // namespace boardroom
