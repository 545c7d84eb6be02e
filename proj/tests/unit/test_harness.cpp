#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridtrust/error.hpp"
#include "gridtrust/harness.hpp"
#include "test_util.hpp"

using namespace gridtrust;
using namespace gridtrust::harness;

namespace {

Errc parse_error(const std::string& text, std::string* detail = nullptr) {
  std::istringstream in(text);
  try {
    Scenario::parse(in);
  } catch (const Error& e) {
    if (detail) *detail = e.what();
    return e.code();
  }
  return Errc::Ok;
}

const char* kSmall =
    "gridtrust-scenario 1\n"
    "name small\n"
    "seed 3\n"
    "prosumer g generation DER 2000 0.10\n"
    "prosumer c consumption EV 2000 0.20\n";

Scenario small() {
  std::istringstream in(kSmall);
  return Scenario::parse(in);
}

}  // namespace

TEST(Scenario, ParsesFiles) {
  auto s = Scenario::load(testutil::scenario("attacks.scn"));
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.rounds, 2u);
  ASSERT_EQ(s.prosumers.size(), 3u);
  EXPECT_EQ(s.prosumers[0].irradiance.at(9), 2100u);
  EXPECT_EQ(s.provision_faults.size(), 2u);
  EXPECT_EQ(s.attacks.size(), all_attacks().size());
}

TEST(Scenario, ParseErrorsNameTheLine) {
  std::string detail;
  EXPECT_EQ(parse_error("", &detail), Errc::ScenarioParseError);
  EXPECT_EQ(parse_error("gridtrust-scenario 2\n"), Errc::ScenarioParseError);
  EXPECT_EQ(parse_error("gridtrust-scenario 1\nfrobnicate\n", &detail), Errc::ScenarioParseError);
  EXPECT_NE(detail.find("line 2"), std::string::npos) << detail;
  EXPECT_EQ(parse_error("gridtrust-scenario 1\nprosumer a generation DER 1\n"), Errc::ScenarioParseError);
  EXPECT_EQ(parse_error("gridtrust-scenario 1\nprosumer a sideways DER 1 0.1\n"), Errc::ScenarioParseError);
  EXPECT_EQ(parse_error("gridtrust-scenario 1\nprosumer a generation DER 1 0.1\nprosumer a generation DER 1 0.1\n"),
            Errc::ScenarioParseError);
  EXPECT_EQ(parse_error("gridtrust-scenario 1\nattack teleport\n"), Errc::ScenarioParseError);
  EXPECT_EQ(parse_error("gridtrust-scenario 1\nfault provision ghost 2 drop\n"), Errc::ScenarioParseError);
  EXPECT_EQ(parse_error("gridtrust-scenario 1\nseed x\n"), Errc::ScenarioParseError);
  try {
    Scenario::load("/nonexistent.scn");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FileUnreadable);
  }
}

TEST(Harness, BaselinePassesAndIsDeterministic) {
  RunOptions opt;
  opt.verb = Verb::Market;
  auto a = run_scenario_file(testutil::scenario("baseline.scn"), opt);
  EXPECT_TRUE(a.passed()) << a.to_text();
  EXPECT_EQ(a.exit_code(), 0);
  opt.socket_links = false;
  auto b = run_scenario_file(testutil::scenario("baseline.scn"), opt);
  EXPECT_EQ(a.to_text(), b.to_text());
  ASSERT_EQ(a.rounds.size(), 1u);
  EXPECT_EQ(a.rounds[0].credits_nano, a.rounds[0].debits_nano);
  EXPECT_EQ(a.rounds[0].credits_nano, 300000000);
  for (const auto& d : a.dispatch) {
    EXPECT_EQ(d.ledger_w, d.register_w);
    EXPECT_EQ(d.output_w, d.expected_output_w);
  }
  EXPECT_EQ(a.secret_leaks, 0u);
  EXPECT_GT(a.secrets_checked, 0u);
}

TEST(Harness, SeedChangesKeysButNotMarket) {
  RunOptions opt;
  opt.verb = Verb::Market;
  opt.socket_links = false;
  auto a = run_scenario(small(), opt);
  opt.seed = 4;
  auto b = run_scenario(small(), opt);
  EXPECT_NE(a.iur_digest, b.iur_digest);
  ASSERT_EQ(a.rounds.size(), 1u);
  EXPECT_EQ(a.rounds[0].price, b.rounds[0].price);
}

TEST(Harness, VerbsLimitPhases) {
  RunOptions opt;
  opt.socket_links = false;
  opt.verb = Verb::Provision;
  auto p = run_scenario(small(), opt);
  EXPECT_TRUE(p.passed());
  EXPECT_TRUE(p.rounds.empty());
  EXPECT_TRUE(p.attacks.empty());
  opt.verb = Verb::Market;
  auto m = run_scenario(small(), opt);
  EXPECT_FALSE(m.rounds.empty());
  EXPECT_TRUE(m.attacks.empty());
}

TEST(Harness, AttackScenarioBlocksEverything) {
  RunOptions opt;
  opt.verb = Verb::Attack;
  opt.socket_links = false;
  auto r = run_scenario_file(testutil::scenario("attacks.scn"), opt);
  EXPECT_TRUE(r.passed()) << r.to_text();
  ASSERT_EQ(r.attacks.size(), all_attacks().size());
  for (const auto& a : r.attacks) EXPECT_TRUE(a.blocked) << to_string(a.kind);
  auto text = r.to_text();
  EXPECT_NE(text.find("verdict pass"), std::string::npos);
  EXPECT_NE(text.find("attack replay-otp blocked ReplayDetected"), std::string::npos);
}

TEST(Harness, FailedStepFailsReport) {
  ScenarioReport r;
  r.steps.push_back({0, "enroll", "x", true, Errc::Ok, ""});
  r.steps.push_back({1, "dispatch", "y", false, Errc::Timeout, "no reply"});
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.first_failed_step(), 1u);
  try {
    r.require_pass();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StepFailure);
  }
  r.steps[1].ok = true;
  r.attacks.push_back({AttackKind::ReplayOtp, false, Errc::Ok, ""});
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.exit_code(), 1);
}

TEST(Audit, SavedLedgersVerifyAndMutationsAreFound) {
  auto dir = std::filesystem::temp_directory_path() / "gridtrust_audit_test";
  std::filesystem::remove_all(dir);
  RunOptions opt;
  opt.verb = Verb::Market;
  opt.socket_links = false;
  opt.ledger_dir = dir;
  run_scenario(small(), opt);
  for (const char* name : {"iur.ledger", "te.ledger"}) {
    auto path = dir / name;
    auto v = audit(path);
    EXPECT_TRUE(v.intact) << name;
    EXPECT_GT(v.entries, 0u);

    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    in.close();
    auto& target = lines[lines.size() / 2];
    target[10] = target[10] == '0' ? '1' : '0';
    std::ofstream out(path, std::ios::trunc);
    for (const auto& l : lines) out << l << "\n";
    out.close();
    auto bad = audit(path);
    EXPECT_FALSE(bad.intact);
    EXPECT_EQ(bad.first_bad_index, lines.size() / 2);
  }
  EXPECT_THROW(audit(dir / "missing.ledger"), Error);
  std::filesystem::remove_all(dir);
}
