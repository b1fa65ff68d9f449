#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const std::string kCli = BOARDROOM_CLI;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("boardroom-cli-" + std::to_string(::getpid()) + "-" +
           ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  Outcome Exec(const std::string& args) {
    static int counter = 0;
    fs::path out = dir / ("out" + std::to_string(counter));
    fs::path err = dir / ("err" + std::to_string(counter++));
    std::string cmd = "cd '" + dir.string() + "' && '" + kCli + "' " + args + " > '" + out.string() + "' 2> '" +
                      err.string() + "'";
    int status = std::system(cmd.c_str());
    return {WEXITSTATUS(status), Slurp(out), Slurp(err)};
  }

  // Error paths: nonzero exit, one stderr line "error[code]: ...".
  void ExpectError(const Outcome& r, const std::string& code) {
    EXPECT_EQ(r.code, 2) << r.err;
    std::string line = r.err;
    while (!line.empty() && line.back() == '\n') line.pop_back();
    EXPECT_EQ(line.find('\n'), std::string::npos) << r.err;
    EXPECT_TRUE(std::regex_match(line, std::regex("error\\[[a-z-]+\\]: .+"))) << line;
    EXPECT_EQ(line.rfind("error[" + code + "]", 0), 0u) << line;
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, SimulateWorkedExample) {
  Outcome r = Exec("simulate -n 4 -m 3 --lambda 3 --choices 1,2,1,0 --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  Json doc = Json::parse(r.out);
  const Json& t = doc.at("tally");
  EXPECT_EQ(t.at("status"), "ok");
  std::vector<int> votes;
  for (const auto& x : t.at("totals")) votes.push_back(x.at("votes"));
  EXPECT_EQ(votes, (std::vector<int>{1, 2, 1}));
  EXPECT_EQ(t.at("counters").at("broadcast_rounds"), 5);
  EXPECT_EQ(t.at("counters").at("ot_sessions"), 3);
}

TEST_F(Cli, SimulateIsByteDeterministic) {
  Outcome a = Exec("simulate --seed 9 --instrumentation");
  Outcome b = Exec("simulate --seed 9 --instrumentation");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  Json doc = Json::parse(a.out);
  EXPECT_EQ(doc.at("instrumentation").at("table1_offset"), 2);
  Outcome c = Exec("simulate --seed 10");
  EXPECT_NE(Json::parse(c.out).at("log").at("head"), doc.at("result").at("log").at("head"));
}

TEST_F(Cli, FaultsExitNonzeroWithTheirReport) {
  Outcome neg = Exec("simulate --choices 1,2,1,0 --fault negative-vote");
  EXPECT_EQ(neg.code, 1);
  Json t = Json::parse(neg.out).at("tally");
  EXPECT_EQ(t.at("anomaly").at("kind"), "negative-exponent");
  Outcome swap = Exec("simulate --choices 1,2,1,0 --fault distributor-swap");
  EXPECT_EQ(swap.code, 1);
  EXPECT_EQ(Json::parse(swap.out).at("tally").at("status"), "halted");
  Outcome withhold = Exec("simulate --fault withhold-share:2");
  EXPECT_EQ(withhold.code, 1);
  EXPECT_EQ(Json::parse(withhold.out).at("tally").at("aborts")[0].at("missing"), Json::array({2}));
}

TEST_F(Cli, ErrorPathsAreSingleLine) {
  ExpectError(Exec("simulate --choices 1,2"), "bad-spec");
  ExpectError(Exec("simulate --choices 1,x,1,0"), "bad-choices");
  ExpectError(Exec("simulate --fault meteor"), "bad-fault");
  ExpectError(Exec("simulate --params nope"), "bad-params");
  ExpectError(Exec("simulate -n 8 -m 2 --lambda 2 --strict-lambda"), "lambda-policy");
  ExpectError(Exec("simulate -n 1"), "config");
  ExpectError(Exec("frobnicate"), "usage");
  ExpectError(Exec("tally"), "usage");
  ExpectError(Exec("tally --log missing.buslog"), "log");
  ExpectError(Exec("relay --config missing.json"), "config");
  ExpectError(Exec("attack-demo teleport"), "usage");
}

TEST_F(Cli, TallyAndAuditOnPersistedLogs) {
  Outcome honest = Exec("simulate --seed 4 --log honest.buslog");
  ASSERT_EQ(honest.code, 0);
  Outcome tally = Exec("tally --log honest.buslog");
  EXPECT_EQ(tally.code, 0);
  EXPECT_EQ(tally.out, honest.out);
  Outcome audit = Exec("audit --log honest.buslog");
  EXPECT_EQ(audit.code, 0);
  EXPECT_EQ(Json::parse(audit.out).at("verdict"), "pass");

  Outcome swapped = Exec("simulate --seed 4 --fault mapping-swap --log swapped.buslog");
  EXPECT_EQ(swapped.code, 1);
  Outcome bad = Exec("audit --log swapped.buslog");
  EXPECT_EQ(bad.code, 1);
  Json verdict = Json::parse(bad.out);
  EXPECT_EQ(verdict.at("verdict"), "fail");
  EXPECT_FALSE(verdict.at("checks").at("masked_list").get<bool>());

  // Truncated and corrupted files.
  std::string bytes = Slurp(dir / "honest.buslog");
  std::ofstream(dir / "cut.buslog", std::ios::binary) << bytes.substr(0, bytes.size() - 10);
  ExpectError(Exec("tally --log cut.buslog"), "log");
  std::string flipped = bytes;
  flipped[flipped.size() - 3] ^= 1;
  std::ofstream(dir / "flip.buslog", std::ios::binary) << flipped;
  ExpectError(Exec("audit --log flip.buslog"), "chain");

  // A log cut at a record boundary is well-formed but incomplete.
  Outcome partial = Exec("simulate --seed 4 --fault withhold-vote --log aborted.buslog");
  EXPECT_EQ(partial.code, 1);
  EXPECT_EQ(Exec("tally --log aborted.buslog").code, 1);
}

TEST_F(Cli, AttackDemos) {
  Outcome col = Exec("attack-demo collusion --seed 1");
  EXPECT_EQ(col.code, 0) << col.out;
  EXPECT_NE(col.out.find("(match)"), std::string::npos);
  Outcome neg = Exec("attack-demo negative-vote");
  EXPECT_EQ(neg.code, 0);
  EXPECT_NE(neg.out.find("negative-exponent"), std::string::npos);
  EXPECT_NE(neg.out.find("cannot say which voter"), std::string::npos);
  Outcome swap = Exec("attack-demo distributor-swap");
  EXPECT_EQ(swap.code, 0);
  EXPECT_NE(swap.out.find("alleges"), std::string::npos);
  EXPECT_NE(swap.out.find("precedes the tally"), std::string::npos);
}

TEST_F(Cli, ParamsPresets) {
  Outcome toy = Exec("params");
  ASSERT_EQ(toy.code, 0);
  EXPECT_EQ(Json::parse(toy.out).at("params").at("q"), "fffffffffffffa43");
  EXPECT_EQ(Json::parse(toy.out).at("preset"), "toy64");
  Outcome big = Exec("params --preset modp2048");
  EXPECT_EQ(Json::parse(big.out).at("modulus_bits"), 2048);
  Outcome gen = Exec("params --generate 48 --seed 2");
  ASSERT_EQ(gen.code, 0);
  EXPECT_TRUE(Json::parse(gen.out).at("valid").get<bool>());
  EXPECT_EQ(Json::parse(gen.out).at("modulus_bits"), 48);
}

TEST_F(Cli, LiveRolesMatchSimulationAndTally) {
  ASSERT_EQ(Exec("setup-election --election-id cross -n 4 -m 3 --lambda 3 --seed 21 --timeout-ms 10000").code, 0);
  std::string relay_cmd = "cd '" + dir.string() + "' && '" + kCli + "' relay --config config.json --port 0 --linger-ms 300";
  FILE* relay = ::popen(relay_cmd.c_str(), "r");
  ASSERT_NE(relay, nullptr);
  char line[256] = {};
  ASSERT_NE(std::fgets(line, sizeof line, relay), nullptr);
  std::smatch m;
  std::string first(line);
  ASSERT_TRUE(std::regex_search(first, m, std::regex(":(\\d+) ")));
  std::string endpoint = "127.0.0.1:" + m[1].str();

  std::vector<int> choices{2, 0, 2, 1};
  std::vector<std::future<Outcome>> nodes;
  for (int id = 0; id < 4; ++id) {
    std::string role = id == 0 ? "distributor" : "voter --id " + std::to_string(id);
    std::string args = role + " --config config.json --key keys/party-" + std::to_string(id) + ".key --relay " +
                       endpoint + " --choice " + std::to_string(choices[id]) + " --seed 21";
    nodes.push_back(std::async(std::launch::async, [this, args] { return Exec(args); }));
  }
  std::vector<Outcome> runs;
  for (auto& f : nodes) runs.push_back(f.get());
  std::string rest;
  while (std::fgets(line, sizeof line, relay)) rest += line;
  EXPECT_EQ(WEXITSTATUS(::pclose(relay)), 0) << rest;

  for (const auto& r : runs) {
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, runs[0].out);
  }
  Json live = Json::parse(runs[0].out);
  EXPECT_EQ(live.at("tally").at("status"), "ok");

  Outcome tally = Exec("tally --log cross.buslog");
  EXPECT_EQ(tally.out, runs[0].out);
  Outcome sim = Exec("simulate --config config.json --seed 21 --choices 2,0,2,1");
  ASSERT_EQ(sim.code, 0) << sim.err;
  EXPECT_EQ(Json::parse(sim.out).at("tally"), live.at("tally"));
  EXPECT_EQ(Json::parse(sim.out).at("config"), live.at("config"));

  // A config whose keys came from another seed is refused by simulate.
  ExpectError(Exec("simulate --config config.json --seed 22"), "config-mismatch");
}

TEST_F(Cli, LiveRoleErrors) {
  ASSERT_EQ(Exec("setup-election --election-id errs --seed 5").code, 0);
  ExpectError(Exec("voter --config config.json --key keys/party-1.key --id 1 --relay 127.0.0.1:1 --choice 0 --connect-timeout-ms 300"),
              "relay-unreachable");
  ExpectError(Exec("voter --config config.json --key keys/party-2.key --id 1 --relay 127.0.0.1:1"), "config");
  ExpectError(Exec("voter --config config.json --key keys/party-0.key --id 0 --relay 127.0.0.1:1"), "config-mismatch");
  ExpectError(Exec("distributor --config config.json --key keys/party-0.key --id 2"), "config-mismatch");
  ExpectError(Exec("voter --config config.json --key nokey --id 1"), "key");
  ExpectError(Exec("voter --config config.json --key keys/party-1.key --id 1 --relay nohost"), "usage");
}
