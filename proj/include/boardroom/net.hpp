#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "boardroom/party.hpp"
#include "boardroom/transport.hpp"

namespace boardroom {

// Party <-> relay frames: u32 length, u8 type, body.
enum class FrameType : uint8_t { kHello = 1, kSubmit = 2, kEntry = 3, kDirect = 4, kError = 5 };

inline constexpr size_t kMaxFrameBytes = 16u << 20;

Bytes EncodeFrame(FrameType type, ByteSpan body);
Bytes EncodeEntryBody(uint64_t index, const LogEntry& entry);

struct EntryFrame {
  uint64_t index;
  LogEntry entry;
};
EntryFrame DecodeEntryBody(ByteSpan body);

class NetError : public std::runtime_error {
 public:
  NetError(std::string code, const std::string& what) : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Star-topology sequencer. Verifies signatures and per-sender sequence
// numbers, fixes the total order, persists the log, forwards OT traffic and
// replays the log to late joiners. Trusted for liveness only.
class Relay {
 public:
  struct Options {
    std::string bind = "127.0.0.1";
    uint16_t port = 0;  // 0 picks a free port
    std::string log_path;
    std::chrono::milliseconds linger{3000};
  };

  Relay(ElectionConfig config, Options options);
  ~Relay();

  uint16_t port() const { return port_; }
  // Serves until the election completes or aborts (plus linger), or Stop().
  void Run();
  void Stop();
  bool done() const { return done_; }
  size_t rejected() const { return rejected_; }
  // Only after Run() returned.
  BusLog log() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  uint16_t port_ = 0;
  std::atomic<bool> done_{false};
  std::atomic<size_t> rejected_{0};
};

// One party process: relay client, protocol state machine and the local
// WebSocket UI lane (JSON events out, {cast, allege} commands in).
class Node {
 public:
  struct Options {
    ElectionConfig config;
    PartyId id = 0;
    std::optional<SigningKey> key;
    std::optional<Rng> rng;
    std::string relay_host = "127.0.0.1";
    uint16_t relay_port = 0;
    std::optional<uint32_t> choice;     // 0-based
    std::optional<uint16_t> ui_port;    // 0 picks a free port
    bool hold_audit = false;
    std::string log_path;
    PartyFaults faults;
    std::chrono::milliseconds connect_timeout{10000};
  };

  explicit Node(Options options);
  ~Node();

  // Bound UI port once Start() returned, if the UI lane is enabled.
  std::optional<uint16_t> ui_port() const;
  // Binds the UI lane; Run() calls it when needed.
  void Start();
  // Runs to Done or Aborted and returns the result document for the local
  // copy of the log. Throws NetError on relay or config failures.
  Json Run();
  const BusLog& log() const { return log_; }
  Phase phase() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  BusLog log_;
};

// "host:port" -> parts. Throws std::invalid_argument.
std::pair<std::string, uint16_t> SplitHostPort(const std::string& text);

}  // namespace boardroom
