#include <gtest/gtest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <filesystem>
#include <future>

#include "boardroom/net.hpp"
#include "boardroom/result.hpp"
#include "boardroom/simulation.hpp"

using namespace boardroom;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using namespace std::chrono_literals;

namespace {

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("boardroom-live-" + std::to_string(::getpid()) + "-" + name))
      .string();
}

// Relay on a background thread.
struct RelayRunner {
  RelayRunner(const ElectionConfig& c, std::chrono::milliseconds linger = 300ms, std::string log_path = "") {
    Relay::Options o;
    o.linger = linger;
    o.log_path = std::move(log_path);
    relay = std::make_unique<Relay>(c, o);
    thread = std::thread([this] { relay->Run(); });
  }
  ~RelayRunner() {
    relay->Stop();
    if (thread.joinable()) thread.join();
  }
  void Join() {
    if (thread.joinable()) thread.join();
  }
  std::unique_ptr<Relay> relay;
  std::thread thread;
};

Node::Options NodeOptions(const GeneratedElection& gen, PartyId id, uint64_t seed, uint16_t port) {
  Node::Options o;
  o.config = gen.config;
  o.id = id;
  o.key = gen.keys.at(id);
  o.rng = PartyRng(seed, id);
  o.relay_port = port;
  return o;
}

// Minimal browser stand-in: a WebSocket client that records every event.
struct UiClient {
  explicit UiClient(uint16_t port) : ws(ioc) {
    tcp::resolver resolver(ioc);
    asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/");
    reader = std::thread([this] {
      for (;;) {
        beast::flat_buffer buf;
        beast::error_code ec;
        ws.read(buf, ec);
        if (ec) break;
        Json ev = Json::parse(beast::buffers_to_string(buf.data()));
        {
          std::lock_guard lock(mu);
          events.push_back(ev);
        }
        cv.notify_all();
      }
      std::lock_guard lock(mu);
      closed = true;
      cv.notify_all();
    });
  }
  ~UiClient() {
    beast::error_code ec;
    ws.next_layer().shutdown(tcp::socket::shutdown_both, ec);
    ws.next_layer().close(ec);
    if (reader.joinable()) reader.join();
  }
  void Send(const Json& cmd) {
    std::lock_guard lock(write_mu);
    ws.write(asio::buffer(cmd.dump()));
  }
  // First event at or after position `from` satisfying pred.
  std::optional<Json> WaitFor(const std::function<bool(const Json&)>& pred, size_t from = 0,
                              std::chrono::milliseconds timeout = 20s) {
    std::unique_lock lock(mu);
    std::optional<Json> hit;
    cv.wait_for(lock, timeout, [&] {
      for (size_t i = from; i < events.size(); ++i)
        if (pred(events[i])) {
          hit = events[i];
          return true;
        }
      return closed;
    });
    return hit;
  }
  std::optional<Json> WaitType(const std::string& type, size_t from = 0) {
    return WaitFor([&](const Json& e) { return e.at("type") == type; }, from);
  }
  size_t Count() {
    std::lock_guard lock(mu);
    return events.size();
  }
  std::vector<Json> Snapshot() {
    std::lock_guard lock(mu);
    return events;
  }

  asio::io_context ioc;
  websocket::stream<tcp::socket> ws;
  std::thread reader;
  std::mutex mu, write_mu;
  std::condition_variable cv;
  std::vector<Json> events;
  bool closed = false;
};

std::future<Json> RunAsync(Node& node) {
  return std::async(std::launch::async, [&node] { return node.Run(); });
}

// Raw relay client for protocol-level checks.
struct RawClient {
  explicit RawClient(uint16_t port) : sock(ioc) {
    sock.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port));
  }
  void Send(FrameType t, ByteSpan body) { asio::write(sock, asio::buffer(EncodeFrame(t, body))); }
  std::pair<FrameType, Bytes> Read() {
    std::array<uint8_t, 4> h{};
    asio::read(sock, asio::buffer(h));
    uint32_t len = (uint32_t{h[0]} << 24) | (uint32_t{h[1]} << 16) | (uint32_t{h[2]} << 8) | h[3];
    Bytes body(len);
    asio::read(sock, asio::buffer(body));
    return {static_cast<FrameType>(body[0]), Bytes(body.begin() + 1, body.end())};
  }
  asio::io_context ioc;
  tcp::socket sock;
};

Bytes Hello(const std::string& election, bool party, PartyId id) {
  ByteWriter w;
  w.Str(election);
  w.U8(party ? 1 : 0);
  w.U32(id);
  return w.bytes();
}

}  // namespace

TEST(Live, HonestElectionDrivenFromTheUiLane) {
  const uint64_t seed = 11;
  ElectionShape shape;
  shape.election_id = "live-honest";
  shape.candidates = {"Ada", "Grace", "Edsger"};
  GeneratedElection gen = GenerateElection(shape, seed);
  gen.config.round_timeout = 20s;
  std::string log_path = TempPath("honest.buslog");
  RelayRunner relay(gen.config, 1500ms, log_path);
  const uint16_t port = relay.relay->port();

  std::vector<uint32_t> scripted{1, 0, 1, 0};  // voter 1 votes from the UI
  std::vector<std::unique_ptr<Node>> nodes;
  for (PartyId id = 0; id < 4; ++id) {
    auto o = NodeOptions(gen, id, seed, port);
    if (id == 1)
      o.ui_port = 0;
    else
      o.choice = scripted[id];
    nodes.push_back(std::make_unique<Node>(std::move(o)));
  }
  nodes[1]->Start();
  UiClient ui(*nodes[1]->ui_port());
  auto hello = ui.WaitType("hello");
  ASSERT_TRUE(hello);
  EXPECT_EQ(hello->at("role"), "voter");
  EXPECT_EQ(hello->at("party"), 1);
  ASSERT_EQ(hello->at("candidates").size(), 3u);
  EXPECT_EQ(hello->at("candidates")[2].at("name"), "Edsger");
  EXPECT_EQ(hello->at("candidates")[2].at("candidate"), 3);

  std::vector<std::future<Json>> results;
  for (auto& n : nodes) results.push_back(RunAsync(*n));

  ASSERT_TRUE(ui.WaitFor([](const Json& e) { return e.at("type") == "phase" && e.at("phase") == "Selecting"; }));
  ui.Send({{"cmd", "cast"}, {"candidate", 9}});
  auto err = ui.WaitFor([](const Json& e) { return e.at("type") == "error"; });
  ASSERT_TRUE(err);
  EXPECT_EQ(err->at("code"), "candidate-out-of-range");
  ui.Send({{"cmd", "shout"}});
  ASSERT_TRUE(ui.WaitFor([](const Json& e) { return e.at("type") == "error" && e.at("code") == "unknown-command"; }));

  size_t mark = ui.Count();
  ui.Send({{"cmd", "cast"}, {"candidate", 3}});
  ui.Send({{"cmd", "cast"}, {"candidate", 3}});
  ui.Send({{"cmd", "cast"}, {"candidate", 1}});
  ASSERT_TRUE(ui.WaitFor([](const Json& e) { return e.at("type") == "ack" && !e.contains("duplicate"); }, mark));
  ASSERT_TRUE(ui.WaitFor([](const Json& e) { return e.at("type") == "ack" && e.value("duplicate", false); }, mark));
  auto again = ui.WaitFor([](const Json& e) { return e.at("type") == "error" && e.at("cmd") == "cast"; }, mark);
  ASSERT_TRUE(again);
  EXPECT_EQ(again->at("code"), "already-cast");

  std::vector<Json> docs;
  for (auto& f : results) docs.push_back(f.get());
  auto totals = ui.WaitType("totals");
  ASSERT_TRUE(totals);
  relay.Join();
  BusLog relay_log = relay.relay->log();
  Json expected = Finalize(relay_log);

  EXPECT_EQ(expected.at("tally").at("status"), "ok");
  std::vector<uint64_t> votes;
  for (const auto& t : expected.at("tally").at("totals")) votes.push_back(t.at("votes"));
  EXPECT_EQ(votes, (std::vector<uint64_t>{1, 2, 1}));
  for (const auto& d : docs) EXPECT_EQ(d.dump(), expected.dump());
  EXPECT_EQ(Finalize(BusLog::Load(log_path)).dump(), expected.dump());
  for (auto& n : nodes) EXPECT_TRUE(DigestEquals(n->log().head(), relay_log.head()));

  // The panel's totals are the log's totals.
  EXPECT_EQ(totals->at("status"), "ok");
  EXPECT_EQ(totals->at("totals"), expected.at("tally").at("totals"));

  auto events = ui.Snapshot();
  // Phase mirror: Selecting then Voted, ending Done.
  std::vector<std::string> phases;
  for (const auto& e : events)
    if (e.at("type") == "phase") phases.push_back(e.at("phase"));
  auto sel = std::find(phases.begin(), phases.end(), "Selecting");
  ASSERT_NE(sel, phases.end());
  EXPECT_EQ(*(sel + 1), "Voted");
  EXPECT_EQ(phases.back(), "Done");

  // Receipt digest is the hash of voter 1's vote envelope on the log.
  std::optional<Json> receipt;
  size_t envelopes = 0;
  for (const auto& e : events) {
    if (e.at("type") == "receipt") receipt = e;
    if (e.at("type") == "envelope") {
      ++envelopes;
      size_t at = e.at("entry");
      EXPECT_EQ(e.at("digest"), ToHex(Envelope::Decode(relay_log.entries().at(at).body).Hash()));
    }
  }
  ASSERT_TRUE(receipt);
  const LogEntry& voted = relay_log.entries().at(receipt->at("entry").get<size_t>());
  Envelope vote_env = Envelope::Decode(voted.body);
  EXPECT_EQ(vote_env.sender, 1u);
  EXPECT_EQ(TypeOf(DecodeMessage(gen.config.group, vote_env.payload)), MsgType::kEncryptedVote);
  EXPECT_EQ(receipt->at("digest"), ToHex(vote_env.Hash()));
  size_t broadcast_entries = 0;
  for (const auto& e : relay_log.entries()) broadcast_entries += e.kind == EntryKind::kEnvelope;
  EXPECT_EQ(envelopes, broadcast_entries);

  auto verdict = ui.WaitType("verdict");
  ASSERT_TRUE(verdict);
  EXPECT_TRUE(verdict->at("ok").get<bool>());
  std::filesystem::remove(log_path);
}

TEST(Live, LateUiSessionGetsTheEventHistory) {
  const uint64_t seed = 12;
  ElectionShape shape;
  shape.election_id = "live-late";
  shape.n = 2;
  shape.m = 2;
  shape.lambda = 2;
  GeneratedElection gen = GenerateElection(shape, seed);
  RelayRunner relay(gen.config);
  std::vector<std::unique_ptr<Node>> nodes;
  for (PartyId id = 0; id < 2; ++id) {
    auto o = NodeOptions(gen, id, seed, relay.relay->port());
    o.choice = 1;
    if (id == 0) o.ui_port = 0;
    nodes.push_back(std::make_unique<Node>(std::move(o)));
  }
  nodes[0]->Start();
  auto f0 = RunAsync(*nodes[0]);
  auto f1 = RunAsync(*nodes[1]);
  Json r0 = f0.get();
  f1.get();
  EXPECT_EQ(nodes[0]->phase(), Phase::kDone);
  // Node still serves its UI until destroyed.
  UiClient ui(*nodes[0]->ui_port());
  auto totals = ui.WaitType("totals");
  ASSERT_TRUE(totals);
  EXPECT_EQ(totals->at("totals"), r0.at("tally").at("totals"));
  auto hello = ui.WaitType("hello");
  ASSERT_TRUE(hello);
  EXPECT_EQ(hello->at("role"), "distributor");
}

TEST(Live, DistributorSwapTurnsTheVictimsVerdictRed) {
  const uint64_t seed = 13;
  ElectionShape shape;
  shape.election_id = "live-swap";
  GeneratedElection gen = GenerateElection(shape, seed);
  std::vector<uint32_t> choices{0, 1, 2, 2};

  // Which table index voter 1 will draw, from its own deterministic randomness.
  Party probe(gen.config, 1, gen.keys.at(1), PartyRng(seed, 1));
  probe.Cast(choices[1]);
  uint32_t idx = *probe.chosen_index();
  CandidateBlockMap blocks{gen.config.lambda, gen.config.m};
  uint32_t other = blocks.FirstIndex((blocks.CandidateOf(idx) + 1) % gen.config.m);

  RelayRunner relay(gen.config);
  std::vector<std::unique_ptr<Node>> nodes;
  for (PartyId id = 0; id < 4; ++id) {
    auto o = NodeOptions(gen, id, seed, relay.relay->port());
    o.choice = choices[id];
    if (id == 0) o.faults.serve_swap[1] = {idx, other};
    if (id == 1 || id == 2) {
      o.ui_port = 0;
      o.hold_audit = true;
    }
    nodes.push_back(std::make_unique<Node>(std::move(o)));
  }
  nodes[1]->Start();
  nodes[2]->Start();
  UiClient victim(*nodes[1]->ui_port());
  UiClient bystander(*nodes[2]->ui_port());
  std::vector<std::future<Json>> results;
  for (auto& n : nodes) results.push_back(RunAsync(*n));

  auto red = victim.WaitType("verdict");
  ASSERT_TRUE(red);
  EXPECT_FALSE(red->at("ok").get<bool>());
  auto green = bystander.WaitType("verdict");
  ASSERT_TRUE(green);
  EXPECT_TRUE(green->at("ok").get<bool>());

  size_t mark = victim.Count();
  victim.Send({{"cmd", "allege"}, {"claim", "my prime is not in my candidate's block"}});
  // A second allegation is refused.
  victim.Send({{"cmd", "allege"}, {"claim", "again"}});
  ASSERT_TRUE(victim.WaitFor([](const Json& e) { return e.at("type") == "ack" && e.at("cmd") == "allege"; }, mark));
  auto dup = victim.WaitFor([](const Json& e) { return e.at("type") == "error" && e.at("cmd") == "allege"; }, mark);
  ASSERT_TRUE(dup);
  EXPECT_EQ(dup->at("code"), "already-responded");

  for (auto& f : results) {
    Json doc = f.get();
    EXPECT_EQ(doc.at("tally").at("status"), "halted");
    ASSERT_EQ(doc.at("tally").at("allegations").size(), 1u);
    EXPECT_EQ(doc.at("tally").at("allegations")[0].at("voter"), 1);
    EXPECT_EQ(doc.at("tally").at("allegations")[0].at("claim"), "my prime is not in my candidate's block");
  }
  auto totals = victim.WaitType("totals");
  ASSERT_TRUE(totals);
  EXPECT_EQ(totals->at("status"), "halted");
  EXPECT_TRUE(totals->at("totals").is_null());
}

TEST(Live, WithheldVoteTimesOutIntoAnAbort) {
  const uint64_t seed = 14;
  ElectionShape shape;
  shape.election_id = "live-withhold";
  GeneratedElection gen = GenerateElection(shape, seed);
  gen.config.round_timeout = 700ms;
  RelayRunner relay(gen.config);
  std::vector<std::unique_ptr<Node>> nodes;
  for (PartyId id = 0; id < 4; ++id) {
    auto o = NodeOptions(gen, id, seed, relay.relay->port());
    o.choice = 0;
    o.faults.withhold_vote = id == 3;
    nodes.push_back(std::make_unique<Node>(std::move(o)));
  }
  std::vector<std::future<Json>> results;
  for (auto& n : nodes) results.push_back(RunAsync(*n));
  for (auto& f : results) {
    Json doc = f.get();
    const Json& t = doc.at("tally");
    EXPECT_EQ(t.at("status"), "aborted");
    ASSERT_FALSE(t.at("aborts").empty());
    EXPECT_EQ(t.at("aborts")[0].at("missing"), Json::array({3}));
    EXPECT_EQ(t.at("aborts")[0].at("round"), 2);
    EXPECT_TRUE(t.at("totals").is_null());
  }
  relay.Join();
  EXPECT_TRUE(relay.relay->done());
}

TEST(Live, RosterMismatchIsRefused) {
  const uint64_t seed = 15;
  ElectionShape shape;
  shape.election_id = "live-mismatch";
  GeneratedElection gen = GenerateElection(shape, seed);
  RelayRunner relay(gen.config);
  auto o = NodeOptions(gen, 1, seed, relay.relay->port());
  o.config.candidates[0] = "Someone else";
  Node node(std::move(o));
  try {
    node.Run();
    FAIL() << "ran against a different config";
  } catch (const NetError& e) {
    EXPECT_EQ(e.code(), "config-mismatch");
  }
}

TEST(Live, UnreachableRelay) {
  GeneratedElection gen = GenerateElection(ElectionShape{}, 1);
  asio::io_context ioc;
  tcp::acceptor probe(ioc, tcp::endpoint(asio::ip::make_address("127.0.0.1"), 0));
  uint16_t dead = probe.local_endpoint().port();
  probe.close();
  auto o = NodeOptions(gen, 1, 1, dead);
  o.connect_timeout = 300ms;
  Node node(std::move(o));
  try {
    node.Run();
    FAIL();
  } catch (const NetError& e) {
    EXPECT_EQ(e.code(), "relay-unreachable");
  }
}

TEST(Live, RelayRejectsForgeriesAndReplays) {
  const uint64_t seed = 16;
  ElectionShape shape;
  shape.election_id = "live-forgery";
  GeneratedElection gen = GenerateElection(shape, seed);
  RelayRunner relay(gen.config);
  RawClient c(relay.relay->port());
  c.Send(FrameType::kHello, Hello("wrong-election", false, 0));
  auto [t0, b0] = c.Read();
  EXPECT_EQ(t0, FrameType::kError);

  c.Send(FrameType::kHello, Hello("live-forgery", false, 0));
  auto [t1, b1] = c.Read();
  ASSERT_EQ(t1, FrameType::kEntry);
  EntryFrame genesis = DecodeEntryBody(b1);
  EXPECT_EQ(genesis.entry.kind, EntryKind::kGenesis);
  EXPECT_EQ(genesis.entry.body, GenesisBody(gen.config));

  Bytes payload = EncodeMessage(PublicKeyShareMsg{GroupElement::FromInteger(gen.config.group, 16)});
  // Signed by party 2's key but claiming to be party 1.
  Envelope forged = SignEnvelope(gen.keys.at(2), "live-forgery", 1, 1, 1, std::nullopt, payload);
  c.Send(FrameType::kSubmit, forged.Encode());
  auto [t2, b2] = c.Read();
  EXPECT_EQ(t2, FrameType::kError);
  EXPECT_NE(std::string(b2.begin(), b2.end()).find("bad signature"), std::string::npos);

  Envelope good = SignEnvelope(gen.keys.at(2), "live-forgery", 2, 1, 1, std::nullopt, payload);
  c.Send(FrameType::kSubmit, good.Encode());
  auto [t3, b3] = c.Read();
  ASSERT_EQ(t3, FrameType::kEntry);
  EntryFrame f = DecodeEntryBody(b3);
  EXPECT_EQ(f.index, 1u);
  EXPECT_TRUE(DigestEquals(f.entry.digest, ChainStep(genesis.entry.digest, EntryKind::kEnvelope, good.Encode())));

  c.Send(FrameType::kSubmit, good.Encode());
  auto [t4, b4] = c.Read();
  EXPECT_EQ(t4, FrameType::kError);
  EXPECT_NE(std::string(b4.begin(), b4.end()).find("replayed"), std::string::npos);
  EXPECT_EQ(relay.relay->rejected(), 3u);

  // A late observer is replayed the same two entries.
  RawClient late(relay.relay->port());
  late.Send(FrameType::kHello, Hello("live-forgery", false, 0));
  EXPECT_EQ(DecodeEntryBody(late.Read().second).index, 0u);
  EntryFrame again = DecodeEntryBody(late.Read().second);
  EXPECT_EQ(again.index, 1u);
  EXPECT_TRUE(DigestEquals(again.entry.digest, f.entry.digest));
}

TEST(Live, OtTrafficIsForwardedAndLogged) {
  // Two voters; the only OT session is distributor <-> voter 1. Every direct
  // message leaves a digest entry on the log.
  const uint64_t seed = 17;
  ElectionShape shape;
  shape.election_id = "live-ot";
  shape.n = 2;
  shape.m = 2;
  shape.lambda = 1;
  GeneratedElection gen = GenerateElection(shape, seed);
  RelayRunner relay(gen.config);
  std::vector<std::unique_ptr<Node>> nodes;
  for (PartyId id = 0; id < 2; ++id) {
    auto o = NodeOptions(gen, id, seed, relay.relay->port());
    o.choice = id;
    nodes.push_back(std::make_unique<Node>(std::move(o)));
  }
  auto f0 = RunAsync(*nodes[0]);
  auto f1 = RunAsync(*nodes[1]);
  Json doc = f0.get();
  f1.get();
  EXPECT_EQ(doc.at("tally").at("status"), "ok");
  EXPECT_EQ(doc.at("tally").at("counters").at("ot_sessions"), 1);
  std::set<uint8_t> phases;
  for (const auto& e : nodes[0]->log().entries())
    if (e.kind == EntryKind::kOtDigest) {
      OtDigestRecord r = OtDigestRecord::Decode(e.body);
      EXPECT_TRUE((r.from == 0 && r.to == 1) || (r.from == 1 && r.to == 0));
      phases.insert(r.phase);
    }
  EXPECT_EQ(phases, (std::set<uint8_t>{1, 2, 3}));
}

TEST(Frames, EntryBodyRoundTrip) {
  BusLog log;
  const LogEntry& e = log.Append(EntryKind::kEnvelope, Bytes{1, 2, 3});
  EntryFrame f = DecodeEntryBody(EncodeEntryBody(7, e));
  EXPECT_EQ(f.index, 7u);
  EXPECT_EQ(f.entry.body, e.body);
  EXPECT_TRUE(DigestEquals(f.entry.digest, e.digest));
  Bytes frame = EncodeFrame(FrameType::kDirect, Bytes{9});
  EXPECT_EQ(frame, (Bytes{0, 0, 0, 2, 4, 9}));
  EXPECT_EQ(SplitHostPort("10.0.0.1:7400"), std::make_pair(std::string("10.0.0.1"), uint16_t{7400}));
  EXPECT_THROW(SplitHostPort("nope"), std::invalid_argument);
  EXPECT_THROW(SplitHostPort("h:99999"), std::invalid_argument);
}
