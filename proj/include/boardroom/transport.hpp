#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boardroom/bytes.hpp"
#include "boardroom/crypto.hpp"
#include "boardroom/elgamal.hpp"

namespace boardroom {

// Signed unit on both lanes. Broadcasts carry no recipient.
struct Envelope {
  std::string election_id;
  PartyId sender = 0;
  uint64_t seq = 0;
  uint8_t round = 0;
  std::optional<PartyId> recipient;
  Bytes payload;
  Signature signature{};

  Bytes SignedBytes() const;
  Bytes Encode() const;
  static Envelope Decode(ByteSpan bytes);
  Digest Hash() const { return Sha256(Encode()); }
};

Envelope SignEnvelope(const SigningKey& key, std::string election_id, PartyId sender, uint64_t seq, uint8_t round,
                      std::optional<PartyId> recipient, Bytes payload);
bool VerifyEnvelope(const Envelope& env, const VerifyKey& key);

enum class EntryKind : uint8_t { kGenesis = 1, kEnvelope = 2, kOtDigest = 3 };

struct LogEntry {
  EntryKind kind;
  Bytes body;
  Digest digest;
};

// Evidence for one point-to-point OT message.
struct OtDigestRecord {
  PartyId from = 0;
  PartyId to = 0;
  uint32_t session = 0;
  uint8_t phase = 0;
  Digest message{};

  Bytes Encode() const;
  static OtDigestRecord Decode(ByteSpan bytes);
  static OtDigestRecord For(const Envelope& direct);
};

class ChainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr Digest kChainStart{};

Digest ChainStep(const Digest& prev, EntryKind kind, ByteSpan body);

// Append-only entry list with a running digest chain.
class BusLog {
 public:
  const LogEntry& Append(EntryKind kind, Bytes body);
  const std::vector<LogEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  const Digest& head() const { return entries_.empty() ? kChainStart : entries_.back().digest; }

  // Throws ChainError at the first link that does not verify.
  void Verify() const;

  Bytes Encode() const;
  // Parses and verifies; DecodeError on a cut-off record, ChainError on a bad link.
  static BusLog Decode(ByteSpan bytes);
  static BusLog Load(const std::string& path);
  void Save(const std::string& path) const;
  // Streams every later Append to path, after writing what is already held.
  void Persist(const std::string& path);

  // Fresh chain over the given kinds and bodies.
  static BusLog Rebuild(const std::vector<std::pair<EntryKind, Bytes>>& items);

 private:
  void WriteRecord(std::ostream& out, const LogEntry& e) const;

  std::vector<LogEntry> entries_;
  std::shared_ptr<std::ofstream> sink_;
};

}  // namespace boardroom
