#include "gridtrust/harness.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace gridtrust::harness {

using envelope::EnvelopeType;
using envelope::MacEnvelope;

namespace {

constexpr device::Tick kTicksPerRound = 10;
constexpr Millis kStepMillis = 1000;
constexpr std::size_t kLeakWindow = 16;

std::string agent_id(const std::string& prosumer) { return prosumer + "-agent"; }

AttackVerdict verdict(AttackKind kind) {
  AttackVerdict v;
  v.kind = kind;
  return v;
}

}  // namespace

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::Provision:
      return "provision";
    case Verb::Market:
      return "market";
    case Verb::Attack:
      return "attack";
  }
  return "?";
}

// Transcript -----------------------------------------------------------------

void Transcript::add(ByteView bytes) {
  std::lock_guard lock(mu_);
  records_.emplace_back(bytes.begin(), bytes.end());
}

std::size_t Transcript::total_bytes() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& r : records_) n += r.size();
  return n;
}

std::size_t Transcript::records() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::size_t Transcript::leaks(ByteView secret, std::size_t min_len) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& r : records_) {
    if (contains_substring_of(r, secret, min_len)) ++n;
  }
  return n;
}

// World ----------------------------------------------------------------------

World::World(const Scenario& scenario, std::uint64_t seed, bool socket_links)
    : scenario_(scenario), seed_(seed), socket_links_(socket_links), rng_(seed, "world") {
  ca_seed_ = rng_.array<crypto::kSeedSize>();
  iur_ = std::make_unique<iur::IurService>(clock_, rng_, ca_seed_);
  ledger_ = std::make_unique<te::TeLedger>(*iur_, clock_);
  vendor_ = &make_chip("vendor");
  iur_->register_device("vendor", vendor_->identity.supply_chain_secret);
  for (const auto& spec : scenario_.prosumers) build_node(spec);
}

World::~World() {
  // Socket threads reference the agents; stop them first.
  for (auto& [id, n] : nodes_) n->socket.reset();
}

World::LooseChip& World::make_chip(const std::string& device_id) {
  auto c = std::make_unique<LooseChip>();
  c->identity.device_id = device_id;
  c->identity.supply_chain_secret = crypto::SymmetricKey(rng_.bytes(crypto::kSymmetricKeySize));
  c->identity.identity_seed = rng_.array<crypto::kSeedSize>();
  c->rng = std::make_unique<DeterministicRandom>(
      seed_, "chip:" + device_id + ":" + std::to_string(loose_.size()));
  c->chip = std::make_unique<chip::CtcChip>(c->identity, clock_, *c->rng);
  c->client = std::make_unique<chip::ChipClient>(recording_pipe(*c->chip));
  loose_.push_back(std::move(c));
  return *loose_.back();
}

chip::ChipPipe World::recording_pipe(chip::CtcChip& chip) {
  return [this, &chip](ByteView frame) {
    transcript_.add(frame);
    auto reply = chip.execute_frame(frame);
    transcript_.add(reply);
    return reply;
  };
}

void World::build_node(const ProsumerSpec& spec) {
  auto n = std::make_unique<Node>();
  auto* node = n.get();
  n->id = spec.id;
  auto identity = [&](const std::string& id) {
    chip::ChipIdentity ident;
    ident.device_id = id;
    ident.supply_chain_secret = crypto::SymmetricKey(rng_.bytes(crypto::kSymmetricKeySize));
    ident.identity_seed = rng_.array<crypto::kSeedSize>();
    return ident;
  };
  n->ems_identity = identity(spec.id);
  n->agent_identity = identity(agent_id(spec.id));
  n->ems_rng = std::make_unique<DeterministicRandom>(seed_, "chip:" + spec.id);
  n->agent_rng = std::make_unique<DeterministicRandom>(seed_, "chip:" + agent_id(spec.id));
  n->ems_chip = std::make_unique<chip::CtcChip>(n->ems_identity, clock_, *n->ems_rng);
  n->agent_chip = std::make_unique<chip::CtcChip>(n->agent_identity, clock_, *n->agent_rng);
  n->ems_client = std::make_unique<chip::ChipClient>(recording_pipe(*n->ems_chip));
  n->agent_client = std::make_unique<chip::ChipClient>(recording_pipe(*n->agent_chip));

  iur_->register_device(spec.id, n->ems_identity.supply_chain_secret, spec.id);
  iur_->register_device(agent_id(spec.id), n->agent_identity.supply_chain_secret, spec.id);

  n->inverter = std::make_unique<device::InverterModel>(device::InverterParams{}, spec.irradiance);
  n->agent = std::make_unique<device::DeviceAgent>(agent_id(spec.id), *n->agent_client,
                                                   *n->inverter, *iur_);
  if (socket_links_) n->socket = std::make_unique<device::SocketLink>(*n->agent);

  auto link = [this, node](const std::string& text) -> std::optional<std::string> {
    transcript_.add(text);
    node->last_request = text;
    auto reply = node->intercept ? node->intercept(text) : deliver(*node, text);
    if (reply) {
      transcript_.add(*reply);
      node->last_response = *reply;
    }
    return reply;
  };
  n->ems = std::make_unique<ems::Ems>(ems::ProsumerConfig{spec.id, device::RegisterMap::rated_w},
                                      *n->ems_client, *ledger_, link);
  order_.push_back(spec.id);
  nodes_.emplace(spec.id, std::move(n));
}

std::optional<std::string> World::deliver(Node& node, const std::string& text) {
  if (node.socket) return node.socket->exchange(text);
  return node.agent->handle_text(text);
}

World::Node& World::node(const std::string& id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::UnknownProsumer, id);
  return *it->second;
}

std::vector<std::string> World::node_ids() const { return order_; }

iur::ProvisioningOutcome World::provision(const std::string& device_id, chip::CtcChip& chip,
                                          const esp::FaultPlan& plan) {
  auto outcome = iur_->provision_device(device_id, recording_pipe(chip), plan);
  for (const auto& [m, bytes] : outcome.trace.sent) transcript_.add(bytes);
  return outcome;
}

bool World::consistent(const std::string& device_id, chip::ChipClient& client) {
  auto rec = iur_->find_device(device_id);
  if (!rec) return false;
  auto status = client.status();
  if (status.config_id != rec->current_config_id) return false;
  auto challenge = rng_.bytes(32);
  auto issued = clock_.now();
  auto tag = client.challenge_respond(challenge, issued, 1000);
  return tag == crypto::mac_compute(rec->current_key, "challenge", challenge, issued);
}

std::vector<Bytes> World::secret_inventory() const {
  std::vector<Bytes> out;
  auto add = [&](ByteView b) { out.emplace_back(b.begin(), b.end()); };
  auto add_identity = [&](const chip::ChipIdentity& id) {
    add(id.supply_chain_secret.secret_bytes());
    add(id.identity_seed);
  };
  std::vector<std::string> ids;
  for (const auto& id : order_) {
    const auto& n = *nodes_.at(id);
    add_identity(n.ems_identity);
    add_identity(n.agent_identity);
    ids.push_back(id);
    ids.push_back(agent_id(id));
  }
  for (const auto& c : loose_) {
    add_identity(c->identity);
    ids.push_back(c->identity.device_id);
  }
  for (const auto& id : ids) {
    if (auto rec = iur_->find_device(id)) {
      add(rec->current_key.secret_bytes());
      add(rec->shared_secret.secret_bytes());
    }
  }
  add(ca_seed_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Report ---------------------------------------------------------------------

bool ScenarioReport::steps_pass() const {
  return std::all_of(steps.begin(), steps.end(), [](const auto& s) { return s.ok; });
}

bool ScenarioReport::all_blocked() const {
  return std::all_of(attacks.begin(), attacks.end(), [](const auto& a) { return a.blocked; });
}

std::optional<std::size_t> ScenarioReport::first_failed_step() const {
  for (const auto& s : steps) {
    if (!s.ok) return s.index;
  }
  return std::nullopt;
}

void ScenarioReport::require_pass() const {
  if (auto i = first_failed_step()) {
    const auto& s = steps[*i - 1];
    throw Error(Errc::StepFailure, "step " + std::to_string(*i) + " " + s.name + " " + s.subject +
                                       ": " + std::string(to_string(s.error)));
  }
}

std::string ScenarioReport::to_text() const {
  std::ostringstream o;
  o << "gridtrust-report 1\n";
  o << "scenario " << scenario << "\n";
  o << "seed " << seed << "\n";
  o << "verb " << to_string(verb) << "\n";
  for (const auto& s : steps) {
    o << "step " << s.index << " " << s.name << " " << s.subject << " " << (s.ok ? "ok" : "FAIL");
    if (!s.ok || s.error != Errc::Ok) o << " " << to_string(s.error);
    if (!s.detail.empty()) o << " " << s.detail;
    o << "\n";
  }
  for (const auto& r : rounds) {
    o << "round " << r.round << " price " << te::format_price(r.price) << " iterations "
      << r.iterations << (r.converged ? " converged" : " not-converged") << " imbalance "
      << r.imbalance_w << " credits " << r.credits_nano << " debits " << r.debits_nano << "\n";
  }
  for (const auto& d : dispatch) {
    o << "dispatch " << d.round << " " << d.prosumer_id << " ledger " << d.ledger_w << " register "
      << d.register_w << " output " << d.output_w << " expected " << d.expected_output_w
      << " irradiance " << d.irradiance_w << "\n";
  }
  for (const auto& a : attacks) {
    o << "attack " << to_string(a.kind) << " " << (a.blocked ? "blocked" : "succeeded") << " "
      << to_string(a.error);
    if (!a.detail.empty()) o << " " << a.detail;
    o << "\n";
  }
  o << "secrecy bytes " << transcript_bytes << " secrets " << secrets_checked << " leaks "
    << secret_leaks << "\n";
  o << "iur-ledger " << (iur_intact ? "intact" : "broken") << " events " << iur_events << " head "
    << iur_digest << "\n";
  o << "te-ledger " << (te_intact ? "intact" : "broken") << " blocks " << te_blocks << " head "
    << te_digest << "\n";
  o << "logical-time-ms " << logical_time_ms << "\n";
  o << "verdict " << (passed() ? "pass" : "fail") << "\n";
  return o.str();
}

// Runner ---------------------------------------------------------------------

namespace {

class Runner {
 public:
  Runner(World& world, ScenarioReport& report) : w_(world), report_(report) {}

  bool step(const std::string& name, const std::string& subject,
            const std::function<std::string()>& body);
  bool provisioning();
  bool market();
  void attacks();
  void finish(const RunOptions& options);

 private:
  bool provision_device(const std::string& device_id, chip::CtcChip& chip,
                        chip::ChipClient& client);
  std::string deliver_raw(World::Node& n, const std::string& text);
  te::SignedProposal forged_bid(const std::string& victim, const iur::Certificate& cert,
                                chip::ChipClient& signer, bool own_key);
  World::LooseChip& mallory();
  World::Node& victim() { return w_.node(w_.node_ids().front()); }

  AttackVerdict replay_otp();
  AttackVerdict tamper_dispatch();
  AttackVerdict response_replay();
  AttackVerdict stolen_credential();
  AttackVerdict device_impersonation();
  AttackVerdict chip_substitution();
  AttackVerdict firmware_reprogram();
  AttackVerdict provision_fault();
  AttackVerdict revoked_certificate();

  World& w_;
  ScenarioReport& report_;
  std::map<std::string, iur::Certificate> certs_;
  World::LooseChip* mallory_ = nullptr;
  std::optional<device::UpdatePackage> installed_;
  std::optional<iur::UpdateCode> installed_code_;
};

bool Runner::step(const std::string& name, const std::string& subject,
                  const std::function<std::string()>& body) {
  StepOutcome s;
  s.index = report_.steps.size() + 1;
  s.name = name;
  s.subject = subject;
  try {
    s.detail = body();
  } catch (const Error& e) {
    s.ok = false;
    s.error = e.code();
  }
  w_.clock().advance(kStepMillis);
  report_.steps.push_back(s);
  return s.ok;
}

bool Runner::provision_device(const std::string& device_id, chip::CtcChip& chip,
                              chip::ChipClient& client) {
  return step("provision", device_id, [&] {
    auto outcome = w_.provision(device_id, chip);
    if (!outcome.committed) throw Error(outcome.error);
    if (!w_.consistent(device_id, client)) throw Error(Errc::Inconsistent);
    return "config " + std::to_string(outcome.config_id);
  });
}

bool Runner::provisioning() {
  bool ok = provision_device("vendor", *w_.vendor().chip, *w_.vendor().client);
  for (const auto& id : w_.node_ids()) {
    auto& n = w_.node(id);
    for (const auto& f : w_.scenario().provision_faults) {
      if (f.prosumer_id != id) continue;
      ok &= step("provision-fault", id, [&] {
        esp::FaultPlan plan;
        plan.faults = {{f.target, f.kind}};
        plan.seed = report_.seed;
        auto outcome = w_.provision(id, *n.ems_chip, plan);
        if (!w_.consistent(id, *n.ems_client)) throw Error(Errc::Inconsistent);
        std::string what = std::string(esp::to_string(f.target)) + " " +
                           std::string(esp::to_string(f.kind)) + " -> ";
        what += outcome.committed
                    ? "committed"
                    : "rolled-back " + std::string(gridtrust::to_string(outcome.error));
        return what + " consistent";
      });
    }
    if (n.ems_client->status().config_id == 0) {
      ok &= provision_device(id, *n.ems_chip, *n.ems_client);
    }
    ok &= provision_device(agent_id(id), *n.agent_chip, *n.agent_client);
  }
  return ok;
}

bool Runner::market() {
  bool ok = true;
  for (const auto& id : w_.node_ids()) {
    ok &= step("enroll", id, [&] {
      auto cert = w_.node(id).ems->enroll();
      certs_[id] = cert;
      return "serial " + std::to_string(cert.serial);
    });
  }
  if (!ok) return false;

  for (std::uint32_t round = 1; round <= w_.scenario().rounds; ++round) {
    for (const auto& spec : w_.scenario().prosumers) {
      ok &= step("bid", spec.id, [&] {
        auto r = w_.node(spec.id).ems->submit_bid(spec.kind, spec.asset, spec.quantity_w,
                                                  spec.price, round);
        if (!r.accepted()) throw Error(r.status);
        return "round " + std::to_string(round) + " block " + std::to_string(*r.block_height);
      });
    }
    te::ClearingResult cleared;
    ok &= step("clear", "round-" + std::to_string(round), [&] {
      cleared = w_.ledger().clear_market(round);
      RoundSummary s;
      s.round = round;
      s.price = cleared.clearing_price;
      s.iterations = cleared.iterations_used;
      s.converged = cleared.converged;
      s.imbalance_w = cleared.imbalance_w;
      report_.rounds.push_back(s);
      if (!cleared.converged) throw Error(Errc::NoBids, "no cross");
      if (cleared.iterations_used > 100 || std::abs(cleared.imbalance_w) > 1) {
        throw Error(Errc::Inconsistent, "balance");
      }
      return "price " + te::format_price(cleared.clearing_price);
    });

    for (const auto& id : w_.node_ids()) {
      ok &= step("dispatch", id, [&] {
        auto& n = w_.node(id);
        te::DispatchSetpoint sp;
        try {
          sp = n.ems->fetch_dispatch(round);
        } catch (const Error& e) {
          if (e.code() == Errc::UnknownProsumer) return std::string("not-dispatched");
          throw;
        }
        auto start = (round - 1) * kTicksPerRound;
        if (n.inverter->now() < start) n.agent->inverter_step(start - n.inverter->now());
        n.ems->dispatch_to_device(sp);
        n.agent->inverter_step(n.inverter->params().response_delay_ticks);
        auto q = n.ems->query_device("output");

        DispatchObservation d;
        d.round = round;
        d.prosumer_id = id;
        d.ledger_w = sp.real_power_w;
        d.register_w = n.agent->registers().setpoint_w;
        d.output_w = static_cast<std::uint32_t>(q.output_w);
        d.irradiance_w = n.inverter->irradiance_now();
        d.expected_output_w =
            device::settled_output(sp.real_power_w, d.irradiance_w, n.inverter->params());
        report_.dispatch.push_back(d);
        if (d.register_w != d.ledger_w) throw Error(Errc::Inconsistent, "register");
        if (d.output_w != d.expected_output_w || d.output_w != n.agent->registers().output_w) {
          throw Error(Errc::Inconsistent, "output");
        }
        return "setpoint " + std::to_string(sp.real_power_w) + " output " +
               std::to_string(d.output_w);
      });
    }

    ok &= step("billing", "round-" + std::to_string(round), [&] {
      auto rows = w_.ledger().round_billing(round);
      std::int64_t credits = 0;
      std::int64_t debits = 0;
      for (const auto& b : rows) {
        if (b.amount_nano != b.energy_wh * b.price) throw Error(Errc::Inconsistent, "amount");
        (b.amount_nano > 0 ? credits : debits) += b.amount_nano > 0 ? b.amount_nano : -b.amount_nano;
        auto mine = w_.node(b.prosumer_id).ems->query_billing(round, round);
        if (mine.size() != 1 || !(mine.front() == b)) throw Error(Errc::Inconsistent, "query");
      }
      if (!report_.rounds.empty() && report_.rounds.back().round == round) {
        report_.rounds.back().credits_nano = credits;
        report_.rounds.back().debits_nano = debits;
      }
      if (credits != debits) throw Error(Errc::Inconsistent, "credits != debits");
      return "rows " + std::to_string(rows.size());
    });
  }
  return ok;
}

World::LooseChip& Runner::mallory() {
  if (!mallory_) {
    mallory_ = &w_.make_chip("mallory");
    // A legitimately registered device gone rogue: it holds a real
    // application key, just not the victim's.
    w_.iur().register_device("mallory", mallory_->identity.supply_chain_secret, "mallory");
    w_.provision("mallory", *mallory_->chip);
  }
  return *mallory_;
}

std::string Runner::deliver_raw(World::Node& n, const std::string& text) {
  w_.transcript().add(text);
  auto reply = w_.deliver(n, text);
  if (!reply) throw Error(Errc::Timeout);
  w_.transcript().add(*reply);
  return *reply;
}

AttackVerdict Runner::replay_otp() {
  auto v = verdict(AttackKind::ReplayOtp);
  auto& n = victim();
  if (!n.last_request) throw Error(Errc::StepFailure, "no captured envelope");
  auto before = n.agent->registers().setpoint_w;
  auto executed = n.agent->executed_commands();
  auto reply = MacEnvelope::from_json(deliver_raw(n, *n.last_request));
  auto reason = envelope::get_string(reply.message, "reason").value_or("");
  v.error = errc_from_string(reason);
  v.blocked = reply.type == EnvelopeType::Error && v.error == Errc::ReplayDetected &&
              n.agent->registers().setpoint_w == before && n.agent->executed_commands() == executed;
  return v;
}

AttackVerdict Runner::tamper_dispatch() {
  auto v = verdict(AttackKind::TamperDispatch);
  auto& n = victim();
  auto before = n.agent->registers().setpoint_w;
  auto executed = n.agent->executed_commands();
  n.intercept = [&](const std::string& text) {
    auto env = MacEnvelope::from_json(text);
    env.message["real_power_w"] = std::int64_t{4000};
    return w_.deliver(n, env.to_json());
  };
  try {
    n.ems->dispatch_to_device({n.id, 1000, 0});
    v.error = Errc::Ok;
  } catch (const Error& e) {
    v.error = e.code();
  }
  n.intercept = nullptr;
  v.blocked = v.error == Errc::OtpRejectedByDevice && n.agent->registers().setpoint_w == before &&
              n.agent->executed_commands() == executed;
  return v;
}

AttackVerdict Runner::response_replay() {
  auto v = verdict(AttackKind::ResponseReplay);
  auto& n = victim();
  if (!n.last_response) throw Error(Errc::StepFailure, "no captured response");
  auto stale = *n.last_response;
  n.intercept = [stale](const std::string&) { return std::optional<std::string>(stale); };
  try {
    n.ems->query_device("output");
    v.error = Errc::Ok;
  } catch (const Error& e) {
    v.error = e.code();
  }
  n.intercept = nullptr;
  v.blocked = v.error == Errc::ResponseOtpInvalid;
  return v;
}

te::SignedProposal Runner::forged_bid(const std::string& victim_id, const iur::Certificate& cert,
                                      chip::ChipClient& signer, bool own_key) {
  te::Bid bid{victim_id, te::BidKind::Consumption, te::AssetType::Other, 4000, 900000,
              w_.scenario().rounds + 1};
  te::SignedProposal p;
  p.client_certificate = cert;
  p.function = te::Function::SubmitBid;
  p.signed_message = bid.encode();
  p.chip_signature = signer.sign(p.signed_message);
  p.chip_public_key = own_key ? signer.public_key() : cert.subject_public_key;
  return p;
}

AttackVerdict Runner::stolen_credential() {
  auto v = verdict(AttackKind::StolenCredential);
  auto& n = victim();
  // Everything an eavesdropper sees on the wire: the certificate and the
  // chip public key. The signature has to come from the attacker's chip.
  const auto& cert = certs_.at(n.id);
  auto& m = mallory();
  auto stolen = w_.ledger().submit(forged_bid(n.id, cert, *m.client, false));
  auto own = w_.ledger().submit(forged_bid(n.id, cert, *m.client, true));
  v.error = stolen.status;
  v.detail = "own-key " + std::string(to_string(own.status));
  v.blocked = stolen.status == Errc::SecondFactorRejected && !own.accepted() &&
              w_.ledger().bids(w_.scenario().rounds + 1).empty();
  return v;
}

AttackVerdict Runner::device_impersonation() {
  auto v = verdict(AttackKind::DeviceImpersonation);
  auto& n = victim();
  auto& m = mallory();
  auto before = n.agent->registers().setpoint_w;
  auto forged = envelope::seal(*m.client, envelope::kEmsToDevice, EnvelopeType::Dispatch,
                               {{"real_power_w", std::int64_t{4000}}}, n.id);
  // Push the counter far ahead so freshness alone cannot explain a rejection.
  forged.counter += 1000;
  forged.otp = m.client->mac_next(envelope::kEmsToDevice, forged.mac_message()).tag;
  auto reply = MacEnvelope::from_json(deliver_raw(n, forged.to_json()));
  v.error = errc_from_string(envelope::get_string(reply.message, "reason").value_or(""));
  v.blocked = reply.type == EnvelopeType::Error && v.error == Errc::OtpMismatch &&
              n.agent->registers().setpoint_w == before;
  return v;
}

AttackVerdict Runner::chip_substitution() {
  auto v = verdict(AttackKind::ChipSubstitution);
  auto& n = victim();
  auto target = agent_id(n.id);
  auto before = w_.iur().find_device(target);
  auto& rogue = w_.make_chip(target);
  auto outcome = w_.provision(target, *rogue.chip);
  auto after = w_.iur().find_device(target);
  v.error = outcome.committed ? Errc::Ok : outcome.error;
  v.blocked = !outcome.committed && before && after &&
              before->current_config_id == after->current_config_id &&
              before->enrolled_public_key == after->enrolled_public_key &&
              rogue.client->status().config_id == 0;
  return v;
}

AttackVerdict Runner::firmware_reprogram() {
  auto v = verdict(AttackKind::FirmwareReprogram);
  auto& n = victim();
  if (!installed_ || !installed_code_) throw Error(Errc::StepFailure, "no baseline update");
  auto version = n.agent->firmware_version();
  auto installs = n.agent->install_count();
  auto& m = mallory();

  // Malicious image signed by the attacker but claiming the vendor, paired
  // with a genuine code the attacker intercepted for another image.
  device::UpdatePackage evil{"evil-1", to_bytes("reprogrammed"), "vendor", {}};
  evil.signature = m.client->sign(evil.signed_bytes());
  device::UpdatePackage next{"2.0", to_bytes("vendor image 2.0"), "vendor", {}};
  next.signature = w_.vendor().client->sign(next.signed_bytes());
  auto intercepted = w_.iur().authorize_update(agent_id(n.id), next.digest()).single_use_code;

  auto attempt = [&](const device::UpdatePackage& pkg, const iur::UpdateCode& code) {
    try {
      n.agent->apply_update(pkg, code);
      return Errc::Ok;
    } catch (const Error& e) {
      return e.code();
    }
  };
  auto forged = attempt(evil, intercepted);
  auto reused = attempt(*installed_, *installed_code_);
  v.error = forged;
  v.detail = "reused-code " + std::string(to_string(reused));
  v.blocked = forged == Errc::BadSignature && reused == Errc::BadCode &&
              n.agent->firmware_version() == version && n.agent->install_count() == installs;
  return v;
}

AttackVerdict Runner::provision_fault() {
  auto v = verdict(AttackKind::ProvisionFault);
  auto& spare = w_.make_chip("spare");
  w_.iur().register_device("spare", spare.identity.supply_chain_secret);
  esp::FaultPlan plan;
  plan.faults = {{esp::WireMessage::Msg3b, esp::FaultKind::Corrupt}};
  plan.seed = report_.seed;
  auto outcome = w_.provision("spare", *spare.chip, plan);
  v.error = outcome.committed ? Errc::Ok : outcome.error;
  v.blocked = !outcome.committed && w_.consistent("spare", *spare.client);
  return v;
}

AttackVerdict Runner::revoked_certificate() {
  auto v = verdict(AttackKind::RevokedCertificate);
  auto& n = victim();
  w_.iur().revoke_certificate(certs_.at(n.id).serial);
  auto r = n.ems->submit_bid(te::BidKind::Consumption, te::AssetType::Other, 100, 100000,
                             w_.scenario().rounds + 1);
  v.error = r.status;
  v.blocked = r.status == Errc::RevokedCertificate;
  return v;
}

void Runner::attacks() {
  auto& n = victim();
  step("update", agent_id(n.id), [&] {
    device::UpdatePackage pkg{"1.1", to_bytes("vendor image 1.1"), "vendor", {}};
    pkg.signature = w_.vendor().client->sign(pkg.signed_bytes());
    auto code = w_.iur().authorize_update(agent_id(n.id), pkg.digest()).single_use_code;
    n.agent->apply_update(pkg, code);
    if (n.agent->install_count() != 1) throw Error(Errc::Inconsistent, "install count");
    installed_ = pkg;
    installed_code_ = code;
    return "version " + n.agent->firmware_version();
  });

  std::set<AttackKind> declared(w_.scenario().attacks.begin(), w_.scenario().attacks.end());
  for (auto kind : all_attacks()) {
    if (!declared.contains(kind)) continue;
    auto v = verdict(kind);
    try {
      switch (kind) {
        case AttackKind::ReplayOtp:
          v = replay_otp();
          break;
        case AttackKind::TamperDispatch:
          v = tamper_dispatch();
          break;
        case AttackKind::ResponseReplay:
          v = response_replay();
          break;
        case AttackKind::StolenCredential:
          v = stolen_credential();
          break;
        case AttackKind::DeviceImpersonation:
          v = device_impersonation();
          break;
        case AttackKind::ChipSubstitution:
          v = chip_substitution();
          break;
        case AttackKind::FirmwareReprogram:
          v = firmware_reprogram();
          break;
        case AttackKind::ProvisionFault:
          v = provision_fault();
          break;
        case AttackKind::RevokedCertificate:
          v = revoked_certificate();
          break;
      }
    } catch (const Error& e) {
      v.blocked = false;
      v.error = e.code();
      v.detail = "harness-error";
    }
    w_.clock().advance(kStepMillis);
    report_.attacks.push_back(v);
  }
}

void Runner::finish(const RunOptions& options) {
  auto secrets = w_.secret_inventory();
  step("secrecy", "transcript", [&] {
    std::size_t leaks = 0;
    for (const auto& s : secrets) leaks += w_.transcript().leaks(s, kLeakWindow);
    report_.transcript_bytes = w_.transcript().total_bytes();
    report_.secrets_checked = secrets.size();
    report_.secret_leaks = leaks;
    if (leaks != 0) throw Error(Errc::Inconsistent, std::to_string(leaks) + " leaks");
    return "";
  });

  auto iur_chain = w_.iur().ledger_snapshot();
  auto te_chain = w_.ledger().block_store();
  report_.iur_intact = iur_chain.verify().intact;
  report_.te_intact = te_chain.verify().intact;
  report_.iur_events = iur_chain.size();
  report_.te_blocks = te_chain.size();
  report_.iur_digest = to_hex(iur_chain.head());
  report_.te_digest = to_hex(te_chain.head());
  if (!report_.iur_intact || !report_.te_intact) {
    step("ledger", "verify", [] () -> std::string { throw Error(Errc::Inconsistent); });
  }
  if (options.ledger_dir) {
    std::filesystem::create_directories(*options.ledger_dir);
    iur_chain.save(*options.ledger_dir / "iur.ledger");
    te_chain.save(*options.ledger_dir / "te.ledger");
  }
  report_.logical_time_ms = w_.clock().now();
}

}  // namespace

ScenarioReport run_scenario(const Scenario& scenario, const RunOptions& options) {
  ScenarioReport report;
  report.scenario = scenario.name;
  report.seed = options.seed.value_or(scenario.seed);
  report.verb = options.verb;

  World world(scenario, report.seed, options.socket_links);
  Runner runner(world, report);
  bool ok = runner.provisioning();
  if (ok && options.verb != Verb::Provision) ok = runner.market();
  if (options.verb == Verb::Attack) {
    if (ok) {
      runner.attacks();
    } else {
      // Attacks need a working fleet; without one every declared attack is
      // reported as not blocked rather than silently skipped.
      for (auto kind : scenario.attacks) {
        auto v = verdict(kind);
        v.error = Errc::StepFailure;
        v.detail = "fleet-not-ready";
        report.attacks.push_back(v);
      }
    }
  }
  runner.finish(options);
  return report;
}

ScenarioReport run_scenario_file(const std::filesystem::path& path, const RunOptions& options) {
  return run_scenario(Scenario::load(path), options);
}

std::string AuditVerdict::to_text() const {
  std::ostringstream o;
  o << "audit " << (intact ? "pass" : "fail") << " entries " << entries;
  if (first_bad_index) o << " first-bad-index " << *first_bad_index;
  o << "\n";
  return o.str();
}

AuditVerdict audit(const std::filesystem::path& ledger_path) {
  auto chain = HashChain::load(ledger_path);
  auto v = chain.verify();
  return {v.intact, v.first_bad_index, chain.size()};
}

}  // namespace gridtrust::harness
