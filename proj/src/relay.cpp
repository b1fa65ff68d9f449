#include <boost/asio.hpp>

#include <map>
#include <set>

#include "boardroom/net.hpp"
#include "boardroom/result.hpp"

namespace boardroom {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

Bytes EncodeFrame(FrameType type, ByteSpan body) {
  ByteWriter w;
  w.U32(static_cast<uint32_t>(body.size() + 1)).U8(static_cast<uint8_t>(type)).Raw(body);
  return std::move(w).Take();
}

Bytes EncodeEntryBody(uint64_t index, const LogEntry& entry) {
  ByteWriter w;
  w.U64(index).U8(static_cast<uint8_t>(entry.kind)).Field(entry.body).Raw(entry.digest);
  return std::move(w).Take();
}

EntryFrame DecodeEntryBody(ByteSpan body) {
  ByteReader r(body);
  EntryFrame f;
  f.index = r.U64();
  uint8_t kind = r.U8();
  if (kind < 1 || kind > 3) throw DecodeError("bad entry kind");
  f.entry.kind = static_cast<EntryKind>(kind);
  f.entry.body = r.Field(kMaxFrameBytes);
  auto d = r.Raw(32);
  std::copy(d.begin(), d.end(), f.entry.digest.begin());
  r.ExpectDone();
  return f;
}

std::pair<std::string, uint16_t> SplitHostPort(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("expected host:port, got '" + text + "'");
  unsigned long port = 0;
  try {
    port = std::stoul(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in '" + text + "'");
  }
  if (port == 0 || port > 65535) throw std::invalid_argument("port out of range in '" + text + "'");
  return {text.substr(0, colon), static_cast<uint16_t>(port)};
}

struct Relay::Impl {
  struct Conn : std::enable_shared_from_this<Conn> {
    Conn(Impl& relay, tcp::socket s) : relay(relay), socket(std::move(s)) {}

    void ReadHeader() {
      auto self = shared_from_this();
      asio::async_read(socket, asio::buffer(header), [self](boost::system::error_code ec, size_t) {
        if (ec) return self->relay.Drop(self);
        uint32_t len = (uint32_t{self->header[0]} << 24) | (uint32_t{self->header[1]} << 16) |
                       (uint32_t{self->header[2]} << 8) | self->header[3];
        if (len == 0 || len > kMaxFrameBytes) return self->relay.Drop(self);
        self->body.resize(len);
        asio::async_read(self->socket, asio::buffer(self->body), [self](boost::system::error_code ec2, size_t) {
          if (ec2) return self->relay.Drop(self);
          self->relay.Handle(self, static_cast<FrameType>(self->body[0]), ByteSpan(self->body).subspan(1));
          if (self->open) self->ReadHeader();
        });
      });
    }

    void Send(Bytes frame) {
      bool idle = outbox.empty();
      outbox.push_back(std::move(frame));
      if (idle) WriteNext();
    }

    void WriteNext() {
      auto self = shared_from_this();
      asio::async_write(socket, asio::buffer(outbox.front()), [self](boost::system::error_code ec, size_t) {
        if (ec) return self->relay.Drop(self);
        self->outbox.pop_front();
        if (!self->outbox.empty()) self->WriteNext();
      });
    }

    Impl& relay;
    tcp::socket socket;
    std::array<uint8_t, 4> header{};
    Bytes body;
    std::deque<Bytes> outbox;
    std::optional<PartyId> party;
    bool subscribed = false;
    bool open = true;
  };

  Impl(Relay& owner, ElectionConfig cfg, Options opts)
      : owner(owner), config(std::move(cfg)), options(std::move(opts)), acceptor(ioc), linger(ioc), view(config) {
    log.Append(EntryKind::kGenesis, GenesisBody(config));
    if (!options.log_path.empty()) log.Persist(options.log_path);
    tcp::endpoint ep(asio::ip::make_address(options.bind), options.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(tcp::acceptor::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void Accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
      if (ec) return;
      auto c = std::make_shared<Conn>(*this, std::move(s));
      conns.insert(c);
      c->ReadHeader();
      Accept();
    });
  }

  void Drop(const std::shared_ptr<Conn>& c) {
    if (!c->open) return;
    c->open = false;
    boost::system::error_code ignored;
    c->socket.close(ignored);
    if (c->party && by_party[*c->party] == c) by_party.erase(*c->party);
    conns.erase(c);
    if (owner.done_ && conns.empty()) Shutdown();
  }

  void Error(const std::shared_ptr<Conn>& c, const std::string& reason) {
    ++owner.rejected_;
    c->Send(EncodeFrame(FrameType::kError, AsBytes(reason)));
  }

  void Handle(const std::shared_ptr<Conn>& c, FrameType type, ByteSpan body) {
    try {
      switch (type) {
        case FrameType::kHello: return OnHello(c, body);
        case FrameType::kSubmit: return OnSubmit(c, body);
        default: return Error(c, "unexpected frame type");
      }
    } catch (const std::exception& e) {
      Error(c, std::string("malformed frame: ") + e.what());
    }
  }

  void OnHello(const std::shared_ptr<Conn>& c, ByteSpan body) {
    ByteReader r(body);
    std::string election = r.Str(1024);
    uint8_t is_party = r.U8();
    PartyId id = r.U32();
    r.ExpectDone();
    if (c->subscribed) return Error(c, "duplicate hello");
    if (election != config.election_id) return Error(c, "election id mismatch");
    if (is_party) {
      if (!config.Find(id)) return Error(c, "unknown party " + std::to_string(id));
      c->party = id;
      by_party[id] = c;
    }
    c->subscribed = true;
    for (size_t i = 0; i < log.size(); ++i) c->Send(EncodeFrame(FrameType::kEntry, EncodeEntryBody(i, log.entries()[i])));
    if (c->party) {
      for (auto& d : pending_direct[id]) c->Send(EncodeFrame(FrameType::kDirect, d));
      pending_direct.erase(id);
    }
  }

  void Publish(EntryKind kind, Bytes body) {
    const LogEntry& e = log.Append(kind, std::move(body));
    Bytes frame = EncodeFrame(FrameType::kEntry, EncodeEntryBody(log.size() - 1, e));
    for (auto& conn : conns)
      if (conn->subscribed) conn->Send(frame);
  }

  void OnSubmit(const std::shared_ptr<Conn>& c, ByteSpan body) {
    Envelope env = Envelope::Decode(body);
    const PartyInfo* sender = config.Find(env.sender);
    if (env.election_id != config.election_id) return Error(c, "rejected: election id mismatch");
    if (!sender || !VerifyEnvelope(env, sender->key)) return Error(c, "rejected: bad signature");
    auto last = last_seq.find(env.sender);
    if (last != last_seq.end() && env.seq <= last->second) return Error(c, "rejected: replayed sequence");
    last_seq[env.sender] = env.seq;
    if (env.recipient) {
      if (!config.Find(*env.recipient)) return Error(c, "rejected: unknown peer");
      Publish(EntryKind::kOtDigest, OtDigestRecord::For(env).Encode());
      Bytes bytes = env.Encode();
      auto to = by_party.find(*env.recipient);
      if (to != by_party.end())
        to->second->Send(EncodeFrame(FrameType::kDirect, bytes));
      else
        pending_direct[*env.recipient].push_back(std::move(bytes));
      return;
    }
    Publish(EntryKind::kEnvelope, env.Encode());
    view.Offer(env, log.size() - 1);
    if (!owner.done_ && (view.complete() || view.aborted())) {
      owner.done_ = true;
      linger.expires_after(options.linger);
      linger.async_wait([this](boost::system::error_code ec) {
        if (!ec) Shutdown();
      });
    }
  }

  void Shutdown() {
    boost::system::error_code ignored;
    acceptor.close(ignored);
    linger.cancel();
    for (auto& conn : std::set<std::shared_ptr<Conn>>(conns)) {
      conn->open = false;
      conn->socket.close(ignored);
    }
    conns.clear();
    by_party.clear();
  }

  Relay& owner;
  ElectionConfig config;
  Options options;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::steady_timer linger;
  BusLog log;
  ElectionView view;
  std::set<std::shared_ptr<Conn>> conns;
  std::map<PartyId, std::shared_ptr<Conn>> by_party;
  std::map<PartyId, std::vector<Bytes>> pending_direct;
  std::map<PartyId, uint64_t> last_seq;
};

Relay::Relay(ElectionConfig config, Options options)
    : impl_(std::make_unique<Impl>(*this, std::move(config), std::move(options))) {
  port_ = impl_->acceptor.local_endpoint().port();
}

Relay::~Relay() = default;

void Relay::Run() {
  impl_->Accept();
  impl_->ioc.run();
}

void Relay::Stop() {
  asio::post(impl_->ioc, [this] { impl_->Shutdown(); });
}

BusLog Relay::log() const { return impl_->log; }

}  // namespace boardroom
