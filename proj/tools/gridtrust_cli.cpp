// gridtrust: scenario runner and ledger auditor.
//
//   gridtrust provision --scenario FILE [--seed N] [--out FILE]
//   gridtrust market    --scenario FILE [--seed N] [--out FILE]
//   gridtrust attack    --scenario FILE [--seed N] [--out FILE]
//   gridtrust audit     (--ledger FILE... | --scenario FILE) [--seed N] [--out FILE]
//
// Exit status is 0 iff every functional step passed and every attack was
// blocked (for audit: every ledger verified).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridtrust/harness.hpp"

namespace fs = std::filesystem;
using namespace gridtrust;

namespace {

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string ledger_dir;
  bool direct_links = false;
};

void add_common(CLI::App* cmd, Common& c, bool scenario_required) {
  auto* opt = cmd->add_option("--scenario", c.scenario, "Scenario file");
  if (scenario_required) opt->required();
  opt->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  cmd->add_option("--out", c.out, "Write the report here instead of stdout");
  cmd->add_option("--ledger-dir", c.ledger_dir, "Save iur.ledger and te.ledger into this directory");
  cmd->add_flag("--direct-links", c.direct_links, "Call device agents directly, not over sockets");
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Error(Errc::FileUnreadable, out);
  f << text;
}

int run(harness::Verb verb, const Common& c) {
  harness::RunOptions opts;
  opts.verb = verb;
  opts.seed = c.seed;
  opts.socket_links = !c.direct_links;
  if (!c.ledger_dir.empty()) opts.ledger_dir = c.ledger_dir;
  auto report = harness::run_scenario_file(c.scenario, opts);
  emit(report.to_text(), c.out);
  return report.exit_code();
}

int audit(const Common& c, const std::vector<std::string>& ledgers) {
  std::vector<fs::path> paths(ledgers.begin(), ledgers.end());
  std::optional<fs::path> scratch;
  if (paths.empty()) {
    if (c.scenario.empty()) throw CLI::ValidationError("audit needs --ledger or --scenario");
    harness::RunOptions opts;
    opts.seed = c.seed;
    opts.socket_links = !c.direct_links;
    fs::path dir = c.ledger_dir;
    if (dir.empty()) {
      std::random_device rd;
      scratch = fs::temp_directory_path() / ("gridtrust-audit-" + std::to_string(rd()));
      dir = *scratch;
    }
    opts.ledger_dir = dir;
    harness::run_scenario_file(c.scenario, opts);
    paths = {dir / "iur.ledger", dir / "te.ledger"};
  }
  std::string text;
  bool all_intact = true;
  for (const auto& p : paths) {
    auto v = harness::audit(p);
    all_intact &= v.intact;
    text += p.filename().string() + " " + v.to_text();
  }
  if (scratch) fs::remove_all(*scratch);
  emit(text, c.out);
  return all_intact ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridtrust scenario runner and ledger auditor"};
  app.require_subcommand(1);

  Common provision_opts;
  Common market_opts;
  Common attack_opts;
  Common audit_opts;
  std::vector<std::string> ledgers;

  auto* provision = app.add_subcommand("provision", "Provision the fleet");
  add_common(provision, provision_opts, true);
  auto* market = app.add_subcommand("market", "Provision, enroll and run market rounds");
  add_common(market, market_opts, true);
  auto* attack = app.add_subcommand("attack", "Full scenario including declared attacks");
  add_common(attack, attack_opts, true);
  auto* audit_cmd = app.add_subcommand("audit", "Verify saved ledger files");
  add_common(audit_cmd, audit_opts, false);
  audit_cmd->add_option("--ledger", ledgers, "Ledger file(s) to verify");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*provision) return run(harness::Verb::Provision, provision_opts);
    if (*market) return run(harness::Verb::Market, market_opts);
    if (*attack) return run(harness::Verb::Attack, attack_opts);
    if (*audit_cmd) return audit(audit_opts, ledgers);
  } catch (const Error& e) {
    std::cerr << "gridtrust: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return 2;
}
