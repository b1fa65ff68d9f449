#include "boardroom/ot.hpp"

#include <algorithm>

namespace boardroom {
namespace {

constexpr size_t kTagBytes = 32;
constexpr uint32_t kMaxOtStrings = 1u << 16;

Digest DeriveKey(const Digest& secret, std::string_view label) { return HmacSha256(secret, AsBytes(label)); }

Bytes Keystream(const Digest& enc_key, size_t len) {
  Bytes out;
  out.reserve(len + 32);
  for (uint64_t counter = 0; out.size() < len; ++counter) {
    const Digest block = Sha256Hasher().Update(enc_key).Update(ByteWriter().U64(counter).bytes()).Final();
    out.insert(out.end(), block.begin(), block.end());
  }
  out.resize(len);
  return out;
}

Digest Tag(const Digest& mac_key, ByteSpan context, ByteSpan ciphertext) {
  ByteWriter w;
  w.Field(context).Field(ciphertext);
  return HmacSha256(mac_key, w.bytes());
}

Bytes Pad(ByteSpan s, size_t padded_len) {
  if (s.size() > kMaxOtStringBytes) {
    throw std::invalid_argument("OT string exceeds " + std::to_string(kMaxOtStringBytes) + " bytes");
  }
  ByteWriter w;
  w.U32(static_cast<uint32_t>(s.size())).Raw(s);
  Bytes out = std::move(w).Take();
  out.resize(padded_len + 4, 0);
  return out;
}

Bytes Unpad(ByteSpan padded) {
  ByteReader r(padded);
  const uint32_t len = r.U32();
  if (len > r.Remaining()) {
    throw OtError("OT plaintext length prefix out of range");
  }
  const ByteSpan body = r.Raw(len);
  return Bytes(body.begin(), body.end());
}

Digest BaseSecret(uint32_t instance_id, int branch, const GroupElement& g_y, const GroupElement& shared) {
  return Sha256Hasher()
      .Update(std::string_view("boardroom/ot2/kdf"))
      .Update(ByteWriter().U32(instance_id).U8(static_cast<uint8_t>(branch)).bytes())
      .Update(g_y.Encode())
      .Update(shared.Encode())
      .Final();
}

Bytes BaseContext(uint32_t instance_id, int branch) {
  ByteWriter w;
  w.Str("ot2").U32(instance_id).U8(static_cast<uint8_t>(branch));
  return std::move(w).Take();
}

Bytes BlobContext(uint32_t session_id, uint32_t index) {
  ByteWriter w;
  w.Str("otn").U32(session_id).U32(index);
  return std::move(w).Take();
}

Digest BlobSecret(uint32_t session_id, uint32_t index, std::span<const Digest> level_keys) {
  Sha256Hasher h;
  h.Update(std::string_view("boardroom/otn/blob")).Update(ByteWriter().U32(session_id).U32(index).bytes());
  for (const Digest& k : level_keys) {
    h.Update(k);
  }
  return h.Final();
}

void CheckBit(int bit) {
  if (bit != 0 && bit != 1) {
    throw std::invalid_argument("OT choice bit must be 0 or 1");
  }
}

void ExpectHeader(ByteReader& r, uint32_t session_id, OtPhase phase) {
  if (r.U32() != session_id) {
    throw OtError("OT message for a different session");
  }
  if (r.U8() != static_cast<uint8_t>(phase)) {
    throw OtError("unexpected OT message phase");
  }
}

}  // namespace

OtChoice OtChoice::Make(uint32_t index, uint32_t count) {
  if (count == 0) {
    throw std::invalid_argument("OT requires at least one string");
  }
  if (index >= count) {
    throw std::invalid_argument("OT choice index out of range");
  }
  return OtChoice{index, count};
}

Bytes SealBlob(const Digest& secret, ByteSpan context, ByteSpan plaintext) {
  const Bytes ks = Keystream(DeriveKey(secret, "enc"), plaintext.size());
  Bytes out(plaintext.begin(), plaintext.end());
  for (size_t i = 0; i < out.size(); ++i) out[i] ^= ks[i];
  const Digest tag = Tag(DeriveKey(secret, "mac"), context, out);
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

std::optional<Bytes> OpenBlob(const Digest& secret, ByteSpan context, ByteSpan blob) {
  if (blob.size() < kTagBytes) {
    return std::nullopt;
  }
  const ByteSpan ct = blob.first(blob.size() - kTagBytes);
  Digest tag;
  std::copy(blob.end() - kTagBytes, blob.end(), tag.begin());
  if (!DigestEquals(tag, Tag(DeriveKey(secret, "mac"), context, ct))) {
    return std::nullopt;
  }
  const Bytes ks = Keystream(DeriveKey(secret, "enc"), ct.size());
  Bytes out(ct.begin(), ct.end());
  for (size_t i = 0; i < out.size(); ++i) out[i] ^= ks[i];
  return out;
}

uint32_t OtLevels(uint32_t count) {
  uint32_t levels = 0;
  while ((uint64_t{1} << levels) < count) ++levels;
  return levels;
}

OtSenderSetup Ot2SenderSetup(const GroupPtr& group, uint32_t instance_id, Rng& rng) {
  return OtSenderSetup{RandomElement(group, rng), instance_id};
}

OtReceiverKeys Ot2ReceiverChooseWith(const OtSenderSetup& setup, int bit, const Scalar& k) {
  CheckBit(bit);
  const GroupElement known = GeneratorPow(k);
  // bit 1: pk0 = c / g^k so the sender's derived pk1 = c / pk0 = g^k.
  GroupElement pk0 = bit == 0 ? known : ModDiv(setup.c, known);
  return OtReceiverKeys{std::move(pk0), setup.instance_id};
}

std::pair<OtReceiverKeys, Scalar> Ot2ReceiverChoose(const OtSenderSetup& setup, int bit, Rng& rng) {
  Scalar k = RandomScalar(setup.c.group(), rng);
  return {Ot2ReceiverChooseWith(setup, bit, k), std::move(k)};
}

GroupElement Ot2SenderKey(const OtSenderSetup& setup, const OtReceiverKeys& keys, int branch) {
  CheckBit(branch);
  return branch == 0 ? keys.pk0 : ModDiv(setup.c, keys.pk0);
}

OtPayload Ot2SenderTransfer(const OtSenderSetup& setup, const OtReceiverKeys& keys, ByteSpan s0,
                            ByteSpan s1, Rng& rng) {
  if (keys.instance_id != setup.instance_id) {
    throw OtError("receiver keys for a different OT instance");
  }
  const size_t padded_len = std::max(s0.size(), s1.size());
  const std::array<ByteSpan, 2> strings{s0, s1};
  const GroupPtr& group = setup.c.group();
  OtPayload payload{setup.instance_id,
                    {OtBranch{GroupElement::One(group), {}}, OtBranch{GroupElement::One(group), {}}}};
  for (int branch = 0; branch < 2; ++branch) {
    const Scalar y = RandomScalar(group, rng);
    GroupElement g_y = GeneratorPow(y);
    const GroupElement shared = ModExp(Ot2SenderKey(setup, keys, branch), y);
    const Digest secret = BaseSecret(setup.instance_id, branch, g_y, shared);
    payload.branches[branch].blob =
        SealBlob(secret, BaseContext(setup.instance_id, branch), Pad(strings[branch], padded_len));
    payload.branches[branch].g_y = std::move(g_y);
  }
  return payload;
}

std::optional<Bytes> Ot2TryOpen(const OtPayload& payload, int branch, const Scalar& k) {
  CheckBit(branch);
  const OtBranch& b = payload.branches[branch];
  const GroupElement shared = ModExp(b.g_y, k);
  const Digest secret = BaseSecret(payload.instance_id, branch, b.g_y, shared);
  std::optional<Bytes> padded = OpenBlob(secret, BaseContext(payload.instance_id, branch), b.blob);
  if (!padded) {
    return std::nullopt;
  }
  return Unpad(*padded);
}

Bytes Ot2ReceiverRecover(const OtPayload& payload, int bit, const Scalar& k) {
  std::optional<Bytes> out = Ot2TryOpen(payload, bit, k);
  if (!out) {
    throw OtError("OT branch failed authentication");
  }
  return std::move(*out);
}

std::pair<uint32_t, OtPhase> PeekOtMessage(ByteSpan message) {
  ByteReader r(message);
  const uint32_t session = r.U32();
  const uint8_t phase = r.U8();
  if (phase < 1 || phase > 3) {
    throw DecodeError("unknown OT phase tag");
  }
  return {session, static_cast<OtPhase>(phase)};
}

OtnSender::OtnSender(GroupPtr group, uint32_t session_id, std::vector<Bytes> strings, Rng rng)
    : group_(std::move(group)), session_id_(session_id), strings_(std::move(strings)), rng_(std::move(rng)) {
  if (strings_.empty()) {
    throw std::invalid_argument("OT requires at least one string");
  }
  if (strings_.size() > kMaxOtStrings) {
    throw std::invalid_argument("too many OT strings");
  }
  padded_len_ = 0;
  for (const Bytes& s : strings_) {
    if (s.size() > kMaxOtStringBytes) {
      throw std::invalid_argument("OT string exceeds " + std::to_string(kMaxOtStringBytes) + " bytes");
    }
    padded_len_ = std::max(padded_len_, s.size());
  }
  levels_ = OtLevels(static_cast<uint32_t>(strings_.size()));
}

Bytes OtnSender::Start() {
  if (started_) {
    throw OtError("OT sender already started");
  }
  started_ = true;
  ByteWriter w;
  w.U32(session_id_).U8(static_cast<uint8_t>(OtPhase::kSetup));
  w.U32(static_cast<uint32_t>(strings_.size())).U32(static_cast<uint32_t>(padded_len_)).U32(levels_);
  for (uint32_t j = 0; j < levels_; ++j) {
    std::array<Digest, 2> keys;
    rng_.Fill(keys[0]);
    rng_.Fill(keys[1]);
    level_keys_.push_back(keys);
    setups_.push_back(Ot2SenderSetup(group_, j, rng_));
    w.Field(setups_.back().c.Encode());
  }
  return std::move(w).Take();
}

Bytes OtnSender::Respond(ByteSpan keys_message) {
  if (!started_ || responded_) {
    throw OtError("OT sender not expecting receiver keys");
  }
  responded_ = true;
  ByteReader r(keys_message);
  ExpectHeader(r, session_id_, OtPhase::kKeys);
  if (r.U32() != levels_) {
    throw OtError("receiver sent the wrong number of base-OT keys");
  }
  std::vector<OtReceiverKeys> keys;
  for (uint32_t j = 0; j < levels_; ++j) {
    keys.push_back(OtReceiverKeys{GroupElement::Decode(group_, r.Field()), j});
  }
  r.ExpectDone();

  ByteWriter w;
  w.U32(session_id_).U8(static_cast<uint8_t>(OtPhase::kTransfer)).U32(levels_);
  for (uint32_t j = 0; j < levels_; ++j) {
    const OtPayload p =
        Ot2SenderTransfer(setups_[j], keys[j], level_keys_[j][0], level_keys_[j][1], rng_);
    w.U32(p.instance_id);
    for (const OtBranch& b : p.branches) {
      w.Field(b.g_y.Encode()).Field(b.blob);
    }
  }
  w.U32(static_cast<uint32_t>(strings_.size()));
  std::vector<Digest> path(levels_);
  for (uint32_t i = 0; i < strings_.size(); ++i) {
    for (uint32_t j = 0; j < levels_; ++j) {
      path[j] = level_keys_[j][(i >> j) & 1];
    }
    w.Field(SealBlob(BlobSecret(session_id_, i, path), BlobContext(session_id_, i), Pad(strings_[i], padded_len_)));
  }
  return std::move(w).Take();
}

struct OtnReceiver::Transfer {
  std::vector<OtPayload> base;
  std::vector<Bytes> blobs;
};

OtnReceiver::OtnReceiver(GroupPtr group, uint32_t session_id, OtChoice choice, Rng rng)
    : group_(std::move(group)), session_id_(session_id), choice_(choice), rng_(std::move(rng)) {}

void OtnReceiver::UseExponents(std::vector<Scalar> exponents) { exponents_ = std::move(exponents); }

Bytes OtnReceiver::OnSetup(ByteSpan setup_message) {
  if (set_up_) {
    throw OtError("OT receiver already set up");
  }
  ByteReader r(setup_message);
  ExpectHeader(r, session_id_, OtPhase::kSetup);
  const uint32_t count = r.U32();
  padded_len_ = r.U32();
  levels_ = r.U32();
  if (count != choice_.count) {
    throw OtError("sender offers " + std::to_string(count) + " strings, expected " +
                  std::to_string(choice_.count));
  }
  if (levels_ != OtLevels(count) || padded_len_ > kMaxOtStringBytes) {
    throw OtError("malformed OT setup");
  }
  for (uint32_t j = 0; j < levels_; ++j) {
    setups_.push_back(OtSenderSetup{GroupElement::Decode(group_, r.Field()), j});
  }
  r.ExpectDone();
  set_up_ = true;

  if (exponents_.empty()) {
    for (uint32_t j = 0; j < levels_; ++j) exponents_.push_back(RandomScalar(group_, rng_));
  } else if (exponents_.size() != levels_) {
    throw std::invalid_argument("injected exponent count does not match OT levels");
  }
  ByteWriter w;
  w.U32(session_id_).U8(static_cast<uint8_t>(OtPhase::kKeys)).U32(levels_);
  for (uint32_t j = 0; j < levels_; ++j) {
    const int bit = static_cast<int>((choice_.index >> j) & 1);
    w.Field(Ot2ReceiverChooseWith(setups_[j], bit, exponents_[j]).pk0.Encode());
  }
  return std::move(w).Take();
}

OtnReceiver::Transfer OtnReceiver::Parse(ByteSpan transfer_message) const {
  if (!set_up_) {
    throw OtError("OT transfer before setup");
  }
  ByteReader r(transfer_message);
  ExpectHeader(r, session_id_, OtPhase::kTransfer);
  if (r.U32() != levels_) {
    throw OtError("transfer has the wrong number of base OTs");
  }
  Transfer t;
  for (uint32_t j = 0; j < levels_; ++j) {
    const uint32_t instance = r.U32();
    GroupElement y0 = GroupElement::Decode(group_, r.Field());
    Bytes b0 = r.Field();
    GroupElement y1 = GroupElement::Decode(group_, r.Field());
    Bytes b1 = r.Field();
    t.base.push_back(OtPayload{instance, {OtBranch{std::move(y0), std::move(b0)}, OtBranch{std::move(y1), std::move(b1)}}});
  }
  const uint32_t count = r.U32();
  if (count != choice_.count) {
    throw OtError("transfer blob count mismatch");
  }
  for (uint32_t i = 0; i < count; ++i) {
    t.blobs.push_back(r.Field());
  }
  r.ExpectDone();
  return t;
}

Bytes OtnReceiver::Finish(ByteSpan transfer_message) {
  const Transfer t = Parse(transfer_message);
  std::vector<Digest> path(levels_);
  for (uint32_t j = 0; j < levels_; ++j) {
    const int bit = static_cast<int>((choice_.index >> j) & 1);
    const Bytes key = Ot2ReceiverRecover(t.base[j], bit, exponents_[j]);
    if (key.size() != 32) {
      throw OtError("base OT delivered a malformed level key");
    }
    std::copy(key.begin(), key.end(), path[j].begin());
  }
  std::optional<Bytes> padded = OpenBlob(BlobSecret(session_id_, choice_.index, path),
                                         BlobContext(session_id_, choice_.index), t.blobs[choice_.index]);
  if (!padded) {
    throw OtError("chosen OT blob failed authentication");
  }
  return Unpad(*padded);
}

std::vector<std::optional<Bytes>> OtnReceiver::TryAllBlobs(ByteSpan transfer_message) const {
  const Transfer t = Parse(transfer_message);
  std::vector<Digest> held(levels_);
  for (uint32_t j = 0; j < levels_; ++j) {
    const int bit = static_cast<int>((choice_.index >> j) & 1);
    std::optional<Bytes> key = Ot2TryOpen(t.base[j], bit, exponents_[j]);
    if (key && key->size() == 32) std::copy(key->begin(), key->end(), held[j].begin());
  }
  std::vector<std::optional<Bytes>> out;
  for (uint32_t i = 0; i < t.blobs.size(); ++i) {
    std::optional<Bytes> padded = OpenBlob(BlobSecret(session_id_, i, held), BlobContext(session_id_, i), t.blobs[i]);
    out.push_back(padded ? std::optional<Bytes>(Unpad(*padded)) : std::nullopt);
  }
  return out;
}

size_t OtnReceiver::CountOpenableForeignBranches(ByteSpan transfer_message) const {
  const Transfer t = Parse(transfer_message);
  size_t openable = 0;
  for (uint32_t j = 0; j < levels_; ++j) {
    const int other = 1 - static_cast<int>((choice_.index >> j) & 1);
    if (Ot2TryOpen(t.base[j], other, exponents_[j])) ++openable;
  }
  return openable;
}

Bytes OtnRun(const GroupPtr& group, std::span<const Bytes> sender_strings, OtChoice choice,
             Rng& sender_rng, Rng& receiver_rng, OtTranscript* transcript) {
  if (choice.count != sender_strings.size()) {
    throw std::invalid_argument("OT choice count does not match the sender's strings");
  }
  OtnSender sender(group, 0, std::vector<Bytes>(sender_strings.begin(), sender_strings.end()),
                   sender_rng.Fork("otn-sender/" + std::to_string(sender_rng.Next64())));
  OtnReceiver receiver(group, 0, choice,
                       receiver_rng.Fork("otn-receiver/" + std::to_string(receiver_rng.Next64())));
  const Bytes m1 = sender.Start();
  const Bytes m2 = receiver.OnSetup(m1);
  const Bytes m3 = sender.Respond(m2);
  if (transcript) {
    transcript->sender_messages = {m1, m3};
    transcript->receiver_messages = {m2};
  }
  return receiver.Finish(m3);
}

}  // namespace boardroom
