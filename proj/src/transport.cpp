#include "boardroom/transport.hpp"

#include <fstream>
#include <iterator>

#include "boardroom/ot.hpp"

namespace boardroom {

namespace {
constexpr std::string_view kEnvelopeTag = "boardroom/envelope/v1";
constexpr std::string_view kChainTag = "boardroom/buslog/v1";
constexpr std::string_view kFileMagic = "BRLOG1\n";
}  // namespace

Bytes Envelope::SignedBytes() const {
  ByteWriter w;
  w.Str(kEnvelopeTag).Str(election_id).U32(sender).U64(seq).U8(round);
  if (recipient)
    w.U8(1).U32(*recipient);
  else
    w.U8(0);
  w.Field(payload);
  return std::move(w).Take();
}

Bytes Envelope::Encode() const {
  Bytes out = SignedBytes();
  out.insert(out.end(), signature.begin(), signature.end());
  return out;
}

Envelope Envelope::Decode(ByteSpan bytes) {
  ByteReader r(bytes);
  if (r.Str(64) != kEnvelopeTag) throw DecodeError("not an envelope");
  Envelope e;
  e.election_id = r.Str(1024);
  e.sender = r.U32();
  e.seq = r.U64();
  e.round = r.U8();
  uint8_t has_recipient = r.U8();
  if (has_recipient > 1) throw DecodeError("bad recipient flag");
  if (has_recipient) e.recipient = r.U32();
  e.payload = r.Field();
  auto sig = r.Raw(e.signature.size());
  std::copy(sig.begin(), sig.end(), e.signature.begin());
  r.ExpectDone();
  return e;
}

Envelope SignEnvelope(const SigningKey& key, std::string election_id, PartyId sender, uint64_t seq, uint8_t round,
                      std::optional<PartyId> recipient, Bytes payload) {
  Envelope e{std::move(election_id), sender, seq, round, recipient, std::move(payload), {}};
  e.signature = key.Sign(e.SignedBytes());
  return e;
}

bool VerifyEnvelope(const Envelope& env, const VerifyKey& key) {
  return VerifySignature(key, env.SignedBytes(), env.signature);
}

Bytes OtDigestRecord::Encode() const {
  ByteWriter w;
  w.U32(from).U32(to).U32(session).U8(phase).Raw(message);
  return std::move(w).Take();
}

OtDigestRecord OtDigestRecord::Decode(ByteSpan bytes) {
  ByteReader r(bytes);
  OtDigestRecord d;
  d.from = r.U32();
  d.to = r.U32();
  d.session = r.U32();
  d.phase = r.U8();
  auto m = r.Raw(d.message.size());
  std::copy(m.begin(), m.end(), d.message.begin());
  r.ExpectDone();
  return d;
}

OtDigestRecord OtDigestRecord::For(const Envelope& direct) {
  OtDigestRecord d;
  d.from = direct.sender;
  d.to = direct.recipient.value_or(direct.sender);
  try {
    auto [session, phase] = PeekOtMessage(direct.payload);
    d.session = session;
    d.phase = static_cast<uint8_t>(phase);
  } catch (const std::exception&) {
    // Unparseable OT traffic is still recorded, with phase 0.
  }
  d.message = direct.Hash();
  return d;
}

Digest ChainStep(const Digest& prev, EntryKind kind, ByteSpan body) {
  Sha256Hasher h;
  h.Update(kChainTag);
  h.Update(prev);
  ByteWriter w;
  w.U8(static_cast<uint8_t>(kind)).Field(body);
  h.Update(w.bytes());
  return h.Final();
}

const LogEntry& BusLog::Append(EntryKind kind, Bytes body) {
  Digest d = ChainStep(head(), kind, body);
  entries_.push_back(LogEntry{kind, std::move(body), d});
  if (sink_) {
    WriteRecord(*sink_, entries_.back());
    sink_->flush();
  }
  return entries_.back();
}

void BusLog::Verify() const {
  Digest prev = kChainStart;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!DigestEquals(ChainStep(prev, e.kind, e.body), e.digest))
      throw ChainError("digest chain broken at entry " + std::to_string(i));
    prev = e.digest;
  }
}

void BusLog::WriteRecord(std::ostream& out, const LogEntry& e) const {
  ByteWriter w;
  w.U8(static_cast<uint8_t>(e.kind)).Field(e.body).Raw(e.digest);
  const auto& b = w.bytes();
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

Bytes BusLog::Encode() const {
  Bytes out(kFileMagic.begin(), kFileMagic.end());
  for (const auto& e : entries_) {
    ByteWriter w;
    w.U8(static_cast<uint8_t>(e.kind)).Field(e.body).Raw(e.digest);
    out.insert(out.end(), w.bytes().begin(), w.bytes().end());
  }
  return out;
}

BusLog BusLog::Decode(ByteSpan bytes) {
  if (bytes.size() < kFileMagic.size() ||
      !std::equal(kFileMagic.begin(), kFileMagic.end(), bytes.begin()))
    throw DecodeError("not a bus log");
  ByteReader r(bytes.subspan(kFileMagic.size()));
  BusLog log;
  try {
    while (!r.Done()) {
      LogEntry e;
      uint8_t kind = r.U8();
      if (kind < 1 || kind > 3) throw DecodeError("unknown log entry kind");
      e.kind = static_cast<EntryKind>(kind);
      e.body = r.Field();
      auto d = r.Raw(e.digest.size());
      std::copy(d.begin(), d.end(), e.digest.begin());
      log.entries_.push_back(std::move(e));
    }
  } catch (const DecodeError& e) {
    throw DecodeError(std::string("truncated or malformed log record: ") + e.what());
  }
  log.Verify();
  return log;
}

BusLog BusLog::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open log " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Decode(data);
}

void BusLog::Save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write log " + path);
  Bytes data = Encode();
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void BusLog::Persist(const std::string& path) {
  auto out = std::make_shared<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*out) throw std::runtime_error("cannot write log " + path);
  out->write(kFileMagic.data(), static_cast<std::streamsize>(kFileMagic.size()));
  for (const auto& e : entries_) WriteRecord(*out, e);
  out->flush();
  sink_ = std::move(out);
}

BusLog BusLog::Rebuild(const std::vector<std::pair<EntryKind, Bytes>>& items) {
  BusLog log;
  for (const auto& [kind, body] : items) log.Append(kind, body);
  return log;
}

}  // namespace boardroom
