#include "boardroom/commitment.hpp"

namespace boardroom {

Commitment CommitWithNonce(ByteSpan payload, const Nonce& nonce) {
  return Commitment{Sha256Hasher().Update(nonce).Update(payload).Final()};
}

std::pair<Commitment, CommitmentOpening> Commit(ByteSpan payload, Rng& rng) {
  CommitmentOpening opening{Bytes(payload.begin(), payload.end()), {}};
  rng.Fill(opening.nonce);
  return {CommitWithNonce(opening.payload, opening.nonce), std::move(opening)};
}

bool VerifyCommitment(const Commitment& commitment, const CommitmentOpening& opening) {
  return DigestEquals(commitment.digest, CommitWithNonce(opening.payload, opening.nonce).digest);
}

}  // namespace boardroom
