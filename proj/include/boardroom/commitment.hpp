#pragma once

#include <array>
#include <utility>

#include "boardroom/bytes.hpp"
#include "boardroom/crypto.hpp"

namespace boardroom {

using Nonce = std::array<uint8_t, 32>;

// H(nonce || payload) with SHA-256.
struct Commitment {
  Digest digest{};
  bool operator==(const Commitment&) const = default;
};

struct CommitmentOpening {
  Bytes payload;
  Nonce nonce{};
};

std::pair<Commitment, CommitmentOpening> Commit(ByteSpan payload, Rng& rng);
Commitment CommitWithNonce(ByteSpan payload, const Nonce& nonce);
bool VerifyCommitment(const Commitment& commitment, const CommitmentOpening& opening);

}  // namespace boardroom
