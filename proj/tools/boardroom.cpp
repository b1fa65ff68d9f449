#include <CLI11.hpp>
#include <boost/system/system_error.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "boardroom/net.hpp"
#include "boardroom/result.hpp"
#include "boardroom/simulation.hpp"

using namespace boardroom;
namespace fs = std::filesystem;

namespace {

// Every failure leaves through here: one line, "error[code]: detail".
struct CliError : std::runtime_error {
  CliError(std::string c, const std::string& what) : std::runtime_error(what), code(std::move(c)) {}
  std::string code;
};

constexpr int kExitError = 2;

std::string OneLine(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

std::vector<uint32_t> ParseChoices(const std::string& csv) {
  std::vector<uint32_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      unsigned long v = std::stoul(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<uint32_t>(v));
    } catch (const std::exception&) {
      throw CliError("bad-choices", "cannot parse choice '" + item + "'");
    }
  }
  return out;
}

GroupPtr GroupByName(const std::string& name) {
  try {
    return PresetGroup(name);
  } catch (const std::exception& e) {
    throw CliError("bad-params", e.what());
  }
}

void PrintJson(const Json& j) { std::cout << j.dump(2) << "\n" << std::flush; }

ElectionShape ShapeFromConfig(const ElectionConfig& c) {
  ElectionShape s;
  s.election_id = c.election_id;
  s.n = c.n;
  s.m = c.m;
  s.lambda = c.lambda;
  s.group = c.group;
  s.ea_mode = c.ea_mode;
  s.strict_lambda = c.strict_lambda;
  s.candidates = c.candidates;
  s.primes = c.primes;
  return s;
}

ElectionConfig LoadConfigOrFail(const std::string& path) {
  try {
    return LoadConfig(path);
  } catch (const ConfigError& e) {
    throw CliError("config", e.what());
  } catch (const std::exception& e) {
    throw CliError("config", path + ": " + e.what());
  }
}

SigningKey LoadKey(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError("key", "cannot read key file " + path);
  std::string hex;
  in >> hex;
  Bytes seed;
  try {
    seed = FromHex(hex);
  } catch (const std::exception&) {
    throw CliError("key", "key file " + path + " is not hex");
  }
  if (seed.size() != 32) throw CliError("key", "key file " + path + " must hold a 32-byte seed");
  return SigningKey::FromSeed(std::span<const uint8_t, 32>(seed.data(), 32));
}

BusLog LoadLogOrFail(const std::string& path) {
  try {
    return BusLog::Load(path);
  } catch (const ChainError& e) {
    throw CliError("chain", e.what());
  } catch (const std::exception& e) {
    throw CliError("log", path + ": " + e.what());
  }
}

void CheckLambda(const ElectionConfig& c) {
  LambdaCheck check = CheckLambdaPolicy(c.lambda, c.m, c.n, c.ea_mode);
  if (check.ok) return;
  if (c.strict_lambda) throw CliError("lambda-policy", check.message);
  std::cerr << "warning: " << check.message << "\n";
}

// ---- params ----------------------------------------------------------------

int CmdParams(const std::string& preset, unsigned bits, std::optional<uint64_t> seed) {
  GroupPtr g;
  if (bits) {
    Rng rng = seed ? Rng::FromSeed(*seed) : Rng::System();
    try {
      g = GenerateParams(bits, rng);
    } catch (const ParamSearchTimeout& e) {
      throw CliError("param-timeout", e.what());
    } catch (const std::invalid_argument& e) {
      throw CliError("bad-params", e.what());
    }
  } else {
    g = GroupByName(preset);
  }
  auto problems = ValidateParams(*g);
  Json j{{"q", ToHexString(g->modulus())}, {"g", ToHexString(g->generator())}};
  Json out{{"params", j}, {"preset", PresetName(*g)}, {"modulus_bits", g->bit_length()}, {"valid", problems.empty()}};
  if (!problems.empty()) out["problems"] = problems;
  PrintJson(out);
  return problems.empty() ? 0 : 1;
}

// ---- setup-election --------------------------------------------------------

struct SetupArgs {
  std::string out_dir = ".";
  std::string election_id = "boardroom";
  uint32_t n = 4, m = 3, lambda = 3;
  std::string preset = "toy64";
  std::string candidates;
  std::optional<uint64_t> seed;
  bool ea_mode = false, strict_lambda = false;
  std::string relay;
  uint64_t timeout_ms = 60000;
};

int CmdSetup(const SetupArgs& a) {
  ElectionShape shape;
  shape.election_id = a.election_id;
  shape.n = a.n;
  shape.m = a.m;
  shape.lambda = a.lambda;
  shape.group = GroupByName(a.preset);
  shape.ea_mode = a.ea_mode;
  shape.strict_lambda = a.strict_lambda;
  if (!a.candidates.empty()) {
    std::stringstream ss(a.candidates);
    std::string name;
    while (std::getline(ss, name, ',')) shape.candidates.push_back(name);
  }
  GeneratedElection gen;
  try {
    // Seeded keys are reproducible by anyone holding the seed: test elections only.
    gen = GenerateElection(shape, a.seed.value_or(0));
    if (!a.seed) {
      Rng rng = Rng::System();
      for (auto& p : gen.config.parties) {
        SigningKey k = SigningKey::Generate(rng);
        p.key = k.verify_key();
        gen.keys.insert_or_assign(p.id, std::move(k));
      }
    }
  } catch (const ConfigError& e) {
    throw CliError("config", e.what());
  }
  gen.config.round_timeout = std::chrono::milliseconds(a.timeout_ms);
  if (!a.relay.empty()) gen.config.relay = a.relay;
  CheckLambda(gen.config);
  fs::create_directories(fs::path(a.out_dir) / "keys");
  std::string cfg_path = (fs::path(a.out_dir) / "config.json").string();
  SaveJson(cfg_path, gen.config.ToJson());
  Json keys = Json::object();
  for (const auto& [id, k] : gen.keys) {
    fs::path p = fs::path(a.out_dir) / "keys" / ("party-" + std::to_string(id) + ".key");
    std::ofstream out(p);
    out << ToHex(k.seed()) << "\n";
    out.close();
    fs::permissions(p, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
    keys[std::to_string(id)] = p.string();
  }
  PrintJson({{"config", cfg_path}, {"keys", keys}, {"seeded_keys", a.seed.has_value()}});
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimArgs {
  std::string config;
  uint32_t n = 4, m = 3, lambda = 3;
  std::string preset = "toy64";
  uint64_t seed = 1;
  std::string choices = "random";
  std::string fault;
  std::string log;
  bool strict_lambda = false, ea_mode = false, instrumentation = false;
  std::optional<uint64_t> reorder_seed;
};

int CmdSimulate(const SimArgs& a) {
  SimulationSpec spec;
  spec.seed = a.seed;
  if (!a.config.empty()) {
    ElectionConfig c = LoadConfigOrFail(a.config);
    spec.shape = ShapeFromConfig(c);
    ElectionConfig derived = GenerateElection(spec.shape, a.seed).config;
    for (const auto& p : c.parties)
      if (!(derived.Find(p.id) && derived.Find(p.id)->key == p.key))
        throw CliError("config-mismatch", "roster keys were not derived from seed " + std::to_string(a.seed));
  } else {
    spec.shape.n = a.n;
    spec.shape.m = a.m;
    spec.shape.lambda = a.lambda;
    spec.shape.group = GroupByName(a.preset);
    spec.shape.ea_mode = a.ea_mode;
  }
  spec.shape.strict_lambda = spec.shape.strict_lambda || a.strict_lambda;
  if (a.choices != "random") spec.choices = ParseChoices(a.choices);
  if (!a.fault.empty()) {
    try {
      spec.fault = FaultSpec::Parse(a.fault);
    } catch (const std::invalid_argument& e) {
      throw CliError("bad-fault", e.what());
    }
  }
  spec.reorder_seed = a.reorder_seed;
  {
    LambdaCheck check = CheckLambdaPolicy(spec.shape.lambda, spec.shape.m, spec.shape.n, spec.shape.ea_mode);
    if (!check.ok && spec.shape.strict_lambda) throw CliError("lambda-policy", check.message);
    if (!check.ok) std::cerr << "warning: " << check.message << "\n";
  }
  SimulationOutcome out;
  try {
    out = RunSimulation(spec);
  } catch (const ConfigError& e) {
    throw CliError("config", e.what());
  } catch (const PrimeConstraintError& e) {
    throw CliError("prime-constraint", e.what());
  } catch (const std::invalid_argument& e) {
    throw CliError("bad-spec", e.what());
  }
  if (!a.log.empty()) out.log.Save(a.log);
  if (a.instrumentation)
    PrintJson({{"result", out.result}, {"instrumentation", out.Instrumentation()}});
  else
    PrintJson(out.result);
  return ResultExitCode(out.result);
}

// ---- live roles ------------------------------------------------------------

std::atomic<Relay*> g_relay{nullptr};

int CmdRelay(const std::string& config_path, uint16_t port, const std::string& bind, std::string log_path,
             uint64_t linger_ms) {
  ElectionConfig c = LoadConfigOrFail(config_path);
  if (log_path.empty()) log_path = c.election_id + ".buslog";
  Relay::Options opt;
  opt.bind = bind;
  opt.port = port;
  opt.log_path = log_path;
  opt.linger = std::chrono::milliseconds(linger_ms);
  std::unique_ptr<Relay> relay;
  try {
    relay = std::make_unique<Relay>(c, opt);
  } catch (const std::exception& e) {
    throw CliError("bind", OneLine(e.what()));
  }
  std::cout << "listening " << bind << ":" << relay->port() << " log " << log_path << std::endl;
  g_relay = relay.get();
  std::signal(SIGINT, [](int) {
    if (Relay* r = g_relay.load()) r->Stop();
  });
  std::signal(SIGTERM, [](int) {
    if (Relay* r = g_relay.load()) r->Stop();
  });
  relay->Run();
  g_relay = nullptr;
  std::cout << (relay->done() ? "election closed" : "stopped") << " entries " << relay->log().size() << " rejected "
            << relay->rejected() << std::endl;
  return relay->done() ? 0 : 1;
}

struct NodeArgs {
  std::string config, key, relay, log, fault;
  std::optional<PartyId> id;
  std::optional<uint32_t> choice;
  std::optional<uint16_t> ui_port;
  std::optional<uint64_t> seed;
  bool hold_audit = false;
  uint64_t connect_timeout_ms = 10000;
};

int CmdNode(const NodeArgs& a, bool distributor_role) {
  ElectionConfig c = LoadConfigOrFail(a.config);
  CheckLambda(c);
  PartyId id = distributor_role ? a.id.value_or(c.distributor) : a.id.value_or(~0u);
  if (!a.id && !distributor_role) throw CliError("usage", "--id is required");
  if (distributor_role && id != c.distributor)
    throw CliError("config-mismatch", "party " + std::to_string(id) + " is not the distributor");
  if (!distributor_role && id == c.distributor)
    throw CliError("config-mismatch", "party " + std::to_string(id) + " is the distributor; use the distributor command");
  if (!c.Find(id)) throw CliError("config-mismatch", "party " + std::to_string(id) + " is not in the roster");

  Node::Options opt;
  opt.config = c;
  opt.id = id;
  opt.key = LoadKey(a.key);
  if (a.seed) opt.rng = PartyRng(*a.seed, id);
  std::string relay = a.relay.empty() ? (c.relay.empty() ? "127.0.0.1:7400" : c.relay) : a.relay;
  try {
    std::tie(opt.relay_host, opt.relay_port) = SplitHostPort(relay);
  } catch (const std::invalid_argument& e) {
    throw CliError("usage", e.what());
  }
  opt.choice = a.choice;
  opt.ui_port = a.ui_port;
  opt.hold_audit = a.hold_audit;
  opt.log_path = a.log;
  opt.connect_timeout = std::chrono::milliseconds(a.connect_timeout_ms);
  if (!a.fault.empty()) {
    FaultSpec f;
    try {
      f = FaultSpec::Parse(a.fault);
    } catch (const std::invalid_argument& e) {
      throw CliError("bad-fault", e.what());
    }
    switch (f.kind) {
      case FaultKind::kWithholdVote: opt.faults.withhold_vote = true; break;
      case FaultKind::kWithholdShare: opt.faults.withhold_share = true; break;
      case FaultKind::kMappingSwap: {
        if (!distributor_role) throw CliError("bad-fault", "mapping-swap is a distributor fault");
        opt.faults.mapping_swap = std::make_pair(0u, c.lambda % (c.lambda * c.m));
        break;
      }
      default: throw CliError("bad-fault", f.Name() + " is simulation-only");
    }
  }
  Node node(std::move(opt));
  try {
    node.Start();
    if (auto p = node.ui_port()) std::cerr << "ui ws://127.0.0.1:" << *p << "/" << std::endl;
    Json result = node.Run();
    PrintJson(result);
    return ResultExitCode(result);
  } catch (const NetError& e) {
    throw CliError(e.code(), OneLine(e.what()));
  } catch (const boost::system::system_error& e) {
    throw CliError("ui-bind", OneLine(e.what()));
  } catch (const ConfigError& e) {
    throw CliError("config", e.what());
  }
}

// ---- tally / audit ---------------------------------------------------------

int CmdTally(const std::string& log_path) {
  BusLog log = LoadLogOrFail(log_path);
  Json result;
  try {
    result = Finalize(log);
  } catch (const IncompleteElection& e) {
    throw CliError("incomplete", e.what());
  } catch (const ChainError& e) {
    throw CliError("chain", e.what());
  }
  PrintJson(result);
  return ResultExitCode(result);
}

int CmdAudit(const std::string& log_path) {
  BusLog log = LoadLogOrFail(log_path);
  Json result;
  try {
    result = Finalize(log);
  } catch (const IncompleteElection& e) {
    throw CliError("incomplete", e.what());
  }
  const Json& t = result.at("tally");
  Json checks = t.at("audit");
  checks["digest_chain"] = true;
  bool pass = true;
  for (auto& [k, v] : checks.items()) pass = pass && v.get<bool>();
  pass = pass && t.at("flags").empty() && t.at("aborts").empty();
  PrintJson({{"election_id", result.at("election_id")},
             {"entries", result.at("log").at("entries")},
             {"head", result.at("log").at("head")},
             {"checks", checks},
             {"flags", t.at("flags")},
             {"allegations", t.at("allegations")},
             {"status", t.at("status")},
             {"verdict", pass ? "pass" : "fail"}});
  return pass ? 0 : 1;
}

// ---- attack-demo -----------------------------------------------------------

std::string Hex(const GroupElement& e) { return ToHexString(e.value()); }

int DemoCollusion(uint64_t seed) {
  SimulationSpec spec;
  spec.seed = seed;
  SimulationOutcome out = RunSimulation(spec);
  const ElectionConfig& c = out.config;
  std::cout << "collusion demo: n=" << c.n << " m=" << c.m << " lambda=" << c.lambda << " seed=" << seed << "\n";
  std::optional<std::pair<PartyId, PartyId>> pair;
  auto holders = c.MaskedHolders();
  for (size_t i = 0; i < holders.size() && !pair; ++i)
    for (size_t j = i + 1; j < holders.size() && !pair; ++j)
      if (out.indices.at(holders[i]) != out.indices.at(holders[j])) pair = {holders[i], holders[j]};
  if (!pair) {
    std::cout << "no two colluders hold distinct masked primes at this seed; try another seed\n";
    return 1;
  }
  auto [a, b] = *pair;
  PrimeTable table = TableFromPrimes(c.lambda, c.m, c.MaskedVotes(), out.result.at("tally").at("primes").get<std::vector<uint64_t>>(), *c.group);
  std::cout << "voters " << a << " and " << b << " pool their OT outputs:\n"
            << "  masked[" << a << "] = " << Hex(out.received.at(a)) << "\n"
            << "  masked[" << b << "] = " << Hex(out.received.at(b)) << "\n"
            << "public prime pool (" << table.size() << " primes) is known from the setup parameters\n";
  auto found = CollusionUnmask(out.received.at(a), out.received.at(b), table);
  if (!found) {
    std::cout << "ratio search found no unique prime pair\n";
    return 1;
  }
  bool match = found->g_s == out.mask->g_s;
  std::cout << "ratio search over " << found->pairs_tested << " ordered prime pairs: masked[" << a
            << "]/masked[" << b << "] = " << found->prime_i << "/" << found->prime_j << "\n"
            << "recovered g^s = " << Hex(found->g_s) << "\n"
            << "true g^s      = " << Hex(out.mask->g_s) << "  (" << (match ? "match" : "MISMATCH") << ")\n";
  if (match) {
    std::cout << "with g^s the colluders strip the mask from every published masked prime:\n";
    for (size_t i = 0; i < out.masked.size(); ++i) {
      GroupElement raw = ModDiv(out.masked[i], found->g_s);
      std::cout << "  index " << i << " -> prime " << raw.value().get_str() << "\n";
    }
    std::cout << "so the assignment, and with it the tally, is readable as soon as the masked list is published\n";
  }
  return match ? 0 : 1;
}

int DemoNegativeVote(uint64_t seed) {
  SimulationSpec spec;
  spec.seed = seed;
  spec.choices = std::vector<uint32_t>{1, 2, 1, 0};
  spec.fault.kind = FaultKind::kNegativeVote;
  SimulationOutcome out = RunSimulation(spec);
  const Json& t = out.result.at("tally");
  std::cout << "negative-vote demo: voter " << *out.fault.party << " learned masked[" << *out.fault.leaked_index
            << "] from a colluding voter and encrypted received^2 / leaked\n";
  std::cout << "status: " << t.at("status").get<std::string>() << "\n";
  if (t.at("anomaly").is_null()) {
    std::cout << "no anomaly detected\n";
    return 1;
  }
  const Json& an = t.at("anomaly");
  std::cout << "anomaly: " << an.at("kind").get<std::string>() << " (" << an.at("details").get<std::string>() << ")\n";
  if (an.contains("reconstructed") && !an.at("reconstructed").is_null())
    std::cout << "reconstructed exponents: " << an.at("reconstructed").dump() << "\n";
  std::cout << "audit checks all pass and no envelope is flagged: the ciphertexts carry no proof, so the log alone\n"
            << "cannot say which voter cast the negative vote\n";
  std::cout << "flags: " << t.at("flags").size() << ", allegations: " << t.at("allegations").size() << "\n";
  return 0;
}

int DemoDistributorSwap(uint64_t seed) {
  SimulationSpec spec;
  spec.seed = seed;
  spec.choices = std::vector<uint32_t>{1, 2, 1, 0};
  spec.fault.kind = FaultKind::kDistributorSwap;
  SimulationOutcome out = RunSimulation(spec);
  const Json& t = out.result.at("tally");
  auto [i, j] = *out.fault.swapped;
  std::cout << "distributor-swap demo: the distributor served voter " << *out.fault.party
            << " an OT table with entries " << i << " and " << j << " exchanged\n";
  std::optional<size_t> alleged_at, unmask_at;
  for (size_t k = 1; k < out.log.size(); ++k) {
    const LogEntry& e = out.log.entries()[k];
    if (e.kind != EntryKind::kEnvelope) continue;
    Envelope env = Envelope::Decode(e.body);
    ProtocolMessage msg = DecodeMessage(out.config.group, env.payload);
    if (std::holds_alternative<AllegationMsg>(msg) && !alleged_at) {
      alleged_at = k;
      std::cout << "entry " << k << ": voter " << env.sender
                << " alleges: " << std::get<AllegationMsg>(msg).claim << "\n";
    }
    if (std::holds_alternative<UnmaskRevealMsg>(msg)) unmask_at = k;
  }
  if (!alleged_at) {
    std::cout << "no allegation raised\n";
    return 1;
  }
  std::cout << "unmask reveal at entry " << (unmask_at ? std::to_string(*unmask_at) : "none")
            << ": the allegation precedes the tally\n"
            << "status: " << t.at("status").get<std::string>() << " (totals withheld pending review)\n";
  return 0;
}

int CmdAttack(const std::string& which, uint64_t seed) {
  try {
    if (which == "collusion") return DemoCollusion(seed);
    if (which == "negative-vote") return DemoNegativeVote(seed);
    if (which == "distributor-swap") return DemoDistributorSwap(seed);
  } catch (const std::invalid_argument& e) {
    throw CliError("bad-spec", e.what());
  }
  throw CliError("usage", "unknown demo '" + which + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-tallying boardroom elections: simulation, live roles, tally and audit"};
  app.require_subcommand(1);

  std::string preset = "toy64";
  unsigned bits = 0;
  std::optional<uint64_t> param_seed;
  auto* params = app.add_subcommand("params", "Print or generate group parameters");
  params->add_option("--preset", preset, "toy64 | modp2048");
  params->add_option("--generate", bits, "Generate a fresh safe-prime group of this many bits");
  params->add_option("--seed", param_seed);

  SetupArgs setup;
  auto* setup_cmd = app.add_subcommand("setup-election", "Write an election config and signing keys");
  setup_cmd->add_option("--out", setup.out_dir);
  setup_cmd->add_option("--election-id", setup.election_id);
  setup_cmd->add_option("-n,--voters", setup.n);
  setup_cmd->add_option("-m,--candidates-count", setup.m);
  setup_cmd->add_option("--lambda", setup.lambda);
  setup_cmd->add_option("--params", setup.preset);
  setup_cmd->add_option("--candidates", setup.candidates, "Comma-separated names");
  setup_cmd->add_option("--seed", setup.seed, "Derive keys from a seed (testing only)");
  setup_cmd->add_flag("--ea-mode", setup.ea_mode);
  setup_cmd->add_flag("--strict-lambda", setup.strict_lambda);
  setup_cmd->add_option("--relay", setup.relay, "host:port");
  setup_cmd->add_option("--timeout-ms", setup.timeout_ms);

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a whole election in-process");
  sim_cmd->add_option("--config", sim.config);
  sim_cmd->add_option("-n,--voters", sim.n);
  sim_cmd->add_option("-m,--candidates-count", sim.m);
  sim_cmd->add_option("--lambda", sim.lambda);
  sim_cmd->add_option("--params", sim.preset);
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--choices", sim.choices, "0-based candidate per voter, CSV, or 'random'");
  sim_cmd->add_option("--fault", sim.fault, "negative-vote | distributor-swap | mapping-swap | withhold-vote | withhold-share | drop-ot [:party]");
  sim_cmd->add_option("--log", sim.log, "Save the bus log");
  sim_cmd->add_option("--reorder-seed", sim.reorder_seed);
  sim_cmd->add_flag("--strict-lambda", sim.strict_lambda);
  sim_cmd->add_flag("--ea-mode", sim.ea_mode);
  sim_cmd->add_flag("--instrumentation", sim.instrumentation, "Also print exponentiation counters");

  std::string relay_config, relay_bind = "127.0.0.1", relay_log;
  uint16_t relay_port = 7400;
  uint64_t linger_ms = 3000;
  auto* relay_cmd = app.add_subcommand("relay", "Run the sequencing relay");
  relay_cmd->add_option("--config", relay_config)->required();
  relay_cmd->add_option("--port", relay_port, "0 picks a free port");
  relay_cmd->add_option("--bind", relay_bind);
  relay_cmd->add_option("--log", relay_log, "Defaults to <election_id>.buslog");
  relay_cmd->add_option("--linger-ms", linger_ms);

  NodeArgs node;
  auto add_node_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", node.config)->required();
    cmd->add_option("--key", node.key)->required();
    cmd->add_option("--id", node.id);
    cmd->add_option("--relay", node.relay, "host:port");
    cmd->add_option("--choice", node.choice, "0-based candidate; omit to vote from the UI");
    cmd->add_option("--port,--ui-port", node.ui_port, "WebSocket UI port, 0 picks a free port");
    cmd->add_option("--log", node.log, "Local copy of the bus log");
    cmd->add_option("--seed", node.seed, "Deterministic party randomness (testing only)");
    cmd->add_option("--fault", node.fault, "withhold-vote | withhold-share | mapping-swap (distributor)");
    cmd->add_option("--connect-timeout-ms", node.connect_timeout_ms);
    cmd->add_flag("--hold-audit", node.hold_audit, "Wait for an allegation or confirmation from the UI");
  };
  auto* dist_cmd = app.add_subcommand("distributor", "Run the distributor");
  add_node_opts(dist_cmd);
  auto* voter_cmd = app.add_subcommand("voter", "Run one voter");
  add_node_opts(voter_cmd);

  std::string tally_log;
  auto* tally_cmd = app.add_subcommand("tally", "Recompute the result from a bus log");
  tally_cmd->add_option("--log", tally_log)->required();
  std::string audit_log;
  auto* audit_cmd = app.add_subcommand("audit", "Re-verify a bus log");
  audit_cmd->add_option("--log", audit_log)->required();

  std::string which;
  uint64_t demo_seed = 1;
  auto* attack_cmd = app.add_subcommand("attack-demo", "collusion | negative-vote | distributor-swap");
  attack_cmd->add_option("which", which)->required()->check(CLI::IsMember({"collusion", "negative-vote", "distributor-swap"}));
  attack_cmd->add_option("--seed", demo_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << OneLine(e.what()) << "\n";
    return kExitError;
  }

  try {
    if (*params) return CmdParams(preset, bits, param_seed);
    if (*setup_cmd) return CmdSetup(setup);
    if (*sim_cmd) return CmdSimulate(sim);
    if (*relay_cmd) return CmdRelay(relay_config, relay_port, relay_bind, relay_log, linger_ms);
    if (*dist_cmd) return CmdNode(node, true);
    if (*voter_cmd) return CmdNode(node, false);
    if (*tally_cmd) return CmdTally(tally_log);
    if (*audit_cmd) return CmdAudit(audit_log);
    if (*attack_cmd) return CmdAttack(which, demo_seed);
  } catch (const CliError& e) {
    std::cerr << "error[" << e.code << "]: " << OneLine(e.what()) << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << OneLine(e.what()) << "\n";
    return kExitError;
  }
  return kExitError;
}
