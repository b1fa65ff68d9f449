#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <set>

#include "boardroom/net.hpp"
#include "boardroom/result.hpp"

namespace boardroom {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

struct NodeEvent {
  enum Kind { kFrame, kCommand, kClosed } kind;
  FrameType frame = FrameType::kError;
  Bytes body;
  Json command;
  std::string reason;
};

}  // namespace

struct Node::Impl {
  struct UiSession : std::enable_shared_from_this<UiSession> {
    UiSession(Impl& node, tcp::socket s) : node(node), ws(std::move(s)) {}

    void Begin() {
      auto self = shared_from_this();
      ws.async_accept([self](beast::error_code ec) {
        if (ec) return self->node.DropUi(self);
        self->ws.text(true);
        for (const auto& line : self->node.History()) self->Send(line);
        self->Read();
      });
    }

    void Read() {
      auto self = shared_from_this();
      ws.async_read(buffer, [self](beast::error_code ec, size_t) {
        if (ec) return self->node.DropUi(self);
        std::string text = beast::buffers_to_string(self->buffer.data());
        self->buffer.consume(self->buffer.size());
        NodeEvent ev{NodeEvent::kCommand, FrameType::kError, {}, {}, ""};
        try {
          ev.command = Json::parse(text);
        } catch (const Json::exception&) {
          ev.command = Json{{"cmd", "invalid"}};
        }
        self->node.Push(std::move(ev));
        self->Read();
      });
    }

    void Send(std::string line) {
      bool idle = outbox.empty();
      outbox.push_back(std::move(line));
      if (idle) WriteNext();
    }

    void WriteNext() {
      auto self = shared_from_this();
      ws.async_write(asio::buffer(outbox.front()), [self](beast::error_code ec, size_t) {
        if (ec) return self->node.DropUi(self);
        self->outbox.pop_front();
        if (!self->outbox.empty()) self->WriteNext();
      });
    }

    Impl& node;
    websocket::stream<tcp::socket> ws;
    beast::flat_buffer buffer;
    std::deque<std::string> outbox;
  };

  explicit Impl(Options o) : opt(std::move(o)), relay(ioc), work(asio::make_work_guard(ioc)) {}

  ~Impl() {
    asio::post(ioc, [this] {
      boost::system::error_code ignored;
      relay.close(ignored);
      if (ui) ui->close(ignored);
      for (auto& s : std::set<std::shared_ptr<UiSession>>(sessions)) beast::get_lowest_layer(s->ws).close(ignored);
      sessions.clear();
    });
    work.reset();
    if (io.joinable()) io.join();
  }

  void Push(NodeEvent ev) {
    {
      std::lock_guard lock(mu);
      queue.push_back(std::move(ev));
    }
    cv.notify_one();
  }

  std::optional<NodeEvent> Pop(std::chrono::steady_clock::time_point deadline) {
    std::unique_lock lock(mu);
    if (!cv.wait_until(lock, deadline, [this] { return !queue.empty(); })) return std::nullopt;
    NodeEvent ev = std::move(queue.front());
    queue.pop_front();
    return ev;
  }

  std::vector<std::string> History() {
    std::lock_guard lock(history_mu);
    return history;
  }

  // Main thread: record and fan out to every UI session.
  void Emit(const Json& event) {
    std::string line = event.dump();
    {
      std::lock_guard lock(history_mu);
      history.push_back(line);
    }
    asio::post(ioc, [this, line] {
      for (auto& s : sessions) s->Send(line);
    });
  }

  void DropUi(const std::shared_ptr<UiSession>& s) { sessions.erase(s); }

  void AcceptUi() {
    ui->async_accept([this](boost::system::error_code ec, tcp::socket s) {
      if (ec) return;
      auto session = std::make_shared<UiSession>(*this, std::move(s));
      sessions.insert(session);
      session->Begin();
      AcceptUi();
    });
  }

  void ReadRelay() {
    asio::async_read(relay, asio::buffer(header), [this](boost::system::error_code ec, size_t) {
      if (ec) return Push(NodeEvent{NodeEvent::kClosed, FrameType::kError, {}, {}, ec.message()});
      uint32_t len = (uint32_t{header[0]} << 24) | (uint32_t{header[1]} << 16) | (uint32_t{header[2]} << 8) | header[3];
      if (len == 0 || len > kMaxFrameBytes)
        return Push(NodeEvent{NodeEvent::kClosed, FrameType::kError, {}, {}, "oversized frame"});
      body.resize(len);
      asio::async_read(relay, asio::buffer(body), [this](boost::system::error_code ec2, size_t) {
        if (ec2) return Push(NodeEvent{NodeEvent::kClosed, FrameType::kError, {}, {}, ec2.message()});
        Push(NodeEvent{NodeEvent::kFrame, static_cast<FrameType>(body[0]), Bytes(body.begin() + 1, body.end()), {}, ""});
        ReadRelay();
      });
    });
  }

  // Main thread.
  void SendFrame(Bytes frame) {
    asio::post(ioc, [this, f = std::move(frame)]() mutable {
      bool idle = outbox.empty();
      outbox.push_back(std::move(f));
      if (idle) WriteNext();
    });
  }

  void WriteNext() {
    asio::async_write(relay, asio::buffer(outbox.front()), [this](boost::system::error_code ec, size_t) {
      if (ec) return Push(NodeEvent{NodeEvent::kClosed, FrameType::kError, {}, {}, ec.message()});
      outbox.pop_front();
      if (!outbox.empty()) WriteNext();
    });
  }

  Options opt;
  asio::io_context ioc;
  tcp::socket relay;
  asio::executor_work_guard<asio::io_context::executor_type> work;
  std::optional<tcp::acceptor> ui;
  std::set<std::shared_ptr<UiSession>> sessions;
  std::thread io;
  std::array<uint8_t, 4> header{};
  Bytes body;
  std::deque<Bytes> outbox;

  std::mutex mu;
  std::condition_variable cv;
  std::deque<NodeEvent> queue;

  std::mutex history_mu;
  std::vector<std::string> history;

  std::unique_ptr<Party> party;
  std::atomic<int> phase{static_cast<int>(Phase::kAwaitKeys)};
  bool started = false;
};

Node::Node(Options options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Node::~Node() = default;

std::optional<uint16_t> Node::ui_port() const {
  if (!impl_->ui) return std::nullopt;
  return impl_->ui->local_endpoint().port();
}

Phase Node::phase() const { return static_cast<Phase>(impl_->phase.load()); }

void Node::Start() {
  auto& im = *impl_;
  if (im.started) return;
  im.started = true;
  const auto& cfg = im.opt.config;
  if (!cfg.Find(im.opt.id)) throw NetError("config", "party " + std::to_string(im.opt.id) + " not in roster");
  if (!im.opt.key) throw NetError("config", "no signing key");
  if (!(im.opt.key->verify_key() == cfg.Find(im.opt.id)->key))
    throw NetError("config", "signing key does not match the roster entry");
  Rng rng = im.opt.rng ? *im.opt.rng : Rng::System();
  im.party = std::make_unique<Party>(cfg, im.opt.id, *im.opt.key, rng);
  im.party->SetFaults(im.opt.faults);
  im.party->SetHoldAudit(im.opt.hold_audit);
  im.party->SetEvents([&im](const Json& ev) {
    if (ev.at("type") == "phase") im.phase = static_cast<int>(im.party->phase());
    im.Emit(ev);
  });
  im.party->SetSender([&im](Envelope env) { im.SendFrame(EncodeFrame(FrameType::kSubmit, env.Encode())); });

  if (im.opt.ui_port) {
    tcp::endpoint ep(asio::ip::make_address("127.0.0.1"), *im.opt.ui_port);
    im.ui.emplace(im.ioc);
    im.ui->open(ep.protocol());
    im.ui->set_option(tcp::acceptor::reuse_address(true));
    im.ui->bind(ep);
    im.ui->listen();
    im.AcceptUi();
  }
  Json candidates = Json::array();
  for (uint32_t i = 0; i < cfg.m; ++i) candidates.push_back({{"candidate", i + 1}, {"name", cfg.candidates[i]}});
  std::string role = im.opt.id == cfg.distributor ? (cfg.ea_mode ? "authority" : "distributor") : "voter";
  im.Emit({{"type", "hello"},
           {"election_id", cfg.election_id},
           {"party", im.opt.id},
           {"role", role},
           {"candidates", candidates},
           {"n", cfg.n},
           {"m", cfg.m},
           {"lambda", cfg.lambda}});
  im.io = std::thread([&im] { im.ioc.run(); });
}

Json Node::Run() {
  Start();
  auto& im = *impl_;
  const auto& cfg = im.opt.config;
  Party& party = *im.party;

  // Connect, retrying while the relay comes up.
  auto give_up = std::chrono::steady_clock::now() + im.opt.connect_timeout;
  for (;;) {
    boost::system::error_code ec;
    tcp::resolver resolver(im.ioc);
    auto results = resolver.resolve(im.opt.relay_host, std::to_string(im.opt.relay_port), ec);
    if (!ec) {
      std::promise<boost::system::error_code> done;
      auto fut = done.get_future();
      asio::post(im.ioc, [&] {
        asio::async_connect(im.relay, results, [&](boost::system::error_code e, const tcp::endpoint&) { done.set_value(e); });
      });
      ec = fut.get();
    }
    if (!ec) break;
    if (std::chrono::steady_clock::now() > give_up)
      throw NetError("relay-unreachable", im.opt.relay_host + ":" + std::to_string(im.opt.relay_port) + ": " + ec.message());
    asio::post(im.ioc, [&im] {
      boost::system::error_code ignored;
      im.relay.close(ignored);
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  asio::post(im.ioc, [&im] { im.ReadRelay(); });
  ByteWriter hello;
  hello.Str(cfg.election_id).U8(1).U32(im.opt.id);
  im.SendFrame(EncodeFrame(FrameType::kHello, hello.bytes()));

  bool genesis_seen = false;
  auto last_progress = std::chrono::steady_clock::now();
  std::optional<std::chrono::steady_clock::time_point> wind_down;

  auto handle_command = [&](const Json& cmd) {
    std::string name = cmd.value("cmd", "");
    try {
      if (name == "cast") {
        int64_t c = cmd.at("candidate").get<int64_t>();
        if (c < 1) throw CommandError("candidate-out-of-range", "candidates are numbered from 1");
        // A repeated click for the same candidate is a no-op.
        if (party.chosen_candidate() == static_cast<uint32_t>(c - 1)) {
          im.Emit({{"type", "ack"}, {"cmd", name}, {"duplicate", true}});
          return;
        }
        party.Cast(static_cast<uint32_t>(c - 1));
      } else if (name == "allege") {
        party.Allege(cmd.value("claim", "allegation filed from the panel"));
      } else {
        throw CommandError("unknown-command", "unknown command '" + name + "'");
      }
      im.Emit({{"type", "ack"}, {"cmd", name}});
    } catch (const CommandError& e) {
      im.Emit({{"type", "error"}, {"cmd", name}, {"code", e.code()}, {"detail", e.what()}});
    } catch (const Json::exception& e) {
      im.Emit({{"type", "error"}, {"cmd", name}, {"code", "bad-command"}, {"detail", e.what()}});
    }
  };

  for (;;) {
    auto deadline = wind_down ? *wind_down : last_progress + cfg.round_timeout;
    auto ev = im.Pop(deadline);
    if (!ev) {
      if (wind_down) break;
      party.OnTimeout();
      wind_down = std::chrono::steady_clock::now() + std::chrono::milliseconds(2000);
      continue;
    }
    if (ev->kind == NodeEvent::kCommand) {
      handle_command(ev->command);
      continue;
    }
    if (ev->kind == NodeEvent::kClosed) {
      if (party.finished()) break;
      throw NetError("relay-closed", "relay connection closed: " + ev->reason);
    }
    switch (ev->frame) {
      case FrameType::kEntry: {
        EntryFrame f = DecodeEntryBody(ev->body);
        if (f.index != log_.size()) throw NetError("log-diverged", "entry index out of order");
        const LogEntry& e = log_.Append(f.entry.kind, f.entry.body);
        if (!DigestEquals(e.digest, f.entry.digest)) throw NetError("log-diverged", "relay digest chain mismatch");
        last_progress = std::chrono::steady_clock::now();
        if (f.index == 0) {
          if (e.kind != EntryKind::kGenesis || e.body != GenesisBody(cfg))
            throw NetError("config-mismatch", "relay election config differs from the local config");
          genesis_seen = true;
          if (!im.opt.log_path.empty()) log_.Persist(im.opt.log_path);
          party.Start();
          if (im.opt.choice && cfg.IsVoter(im.opt.id) && !party.chosen_candidate()) {
            try {
              party.Cast(*im.opt.choice);
            } catch (const CommandError& err) {
              throw NetError("bad-choice", err.what());
            }
          }
        } else if (e.kind == EntryKind::kEnvelope) {
          party.OnBroadcast(Envelope::Decode(e.body), f.index);
        } else if (e.kind == EntryKind::kOtDigest) {
          party.OnOtDigest(OtDigestRecord::Decode(e.body));
        }
        break;
      }
      case FrameType::kDirect: party.OnDirect(Envelope::Decode(ev->body)); break;
      case FrameType::kError: {
        std::string reason(ev->body.begin(), ev->body.end());
        if (!genesis_seen) throw NetError("relay-rejected", reason);
        im.Emit({{"type", "error"}, {"code", "relay-rejected"}, {"detail", reason}});
        break;
      }
      default: break;
    }
    if (party.phase() == Phase::kDone) break;
    if (party.phase() == Phase::kAborted && !wind_down)
      wind_down = std::chrono::steady_clock::now() + std::chrono::milliseconds(2000);
  }
  // Commands that arrived after the end still get an answer.
  while (auto ev = im.Pop(std::chrono::steady_clock::now()))
    if (ev->kind == NodeEvent::kCommand) handle_command(ev->command);
  try {
    return Finalize(log_);
  } catch (const IncompleteElection& e) {
    throw NetError("incomplete", e.what());
  }
}

}  // namespace boardroom
