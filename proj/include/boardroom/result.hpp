#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boardroom/ballot.hpp"
#include "boardroom/config.hpp"
#include "boardroom/transport.hpp"
#include "boardroom/view.hpp"

namespace boardroom {

// The log ends before the election finished or aborted. No tally is produced.
class IncompleteElection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TallyReport {
  // ok | anomaly | flagged | halted | aborted
  std::string status;
  std::optional<std::vector<uint64_t>> totals;
  std::optional<PrimeTable> table;
  std::optional<PrimeAssignment> assignment;
  std::optional<ExponentVector> exponents;
  std::optional<AnomalyReport> anomaly;
  std::map<std::string, bool> audit;
  std::vector<Flag> flags;
};

// Runs the unmask-round checks and the tally. Throws IncompleteElection unless
// the view is complete or aborted.
TallyReport EvaluateTally(const ElectionView& view);

Bytes GenesisBody(const ElectionConfig& config);
ElectionConfig GenesisConfig(const BusLog& log);

// Feeds every envelope and OT digest of a verified log into a fresh view.
ElectionView ReplayView(const BusLog& log);

// The election result document for a log: a pure function of the log bytes.
Json Finalize(const BusLog& log);

// Process exit status implied by a result document: 0 only for status ok.
int ResultExitCode(const Json& result);

}  // namespace boardroom
