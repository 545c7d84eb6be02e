#include "gridtrust/esp.hpp"

#include <algorithm>
#include <deque>

namespace gridtrust::esp {

namespace {

constexpr std::uint32_t kConfirmDeadlineMs = 1000;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int segment_rank(WireMessage m) { return static_cast<int>(m); }

// Collapse per-party failure codes into the registrar-facing outcome codes.
Errc normalize(Errc e, WireMessage at) {
  if (e == Errc::Ok || e == Errc::Timeout) return e;
  if (at == WireMessage::Hello || at == WireMessage::Msg1 || at == WireMessage::Msg2) {
    return Errc::ChallengeFailure;
  }
  return Errc::SupersessionFailure;
}

}  // namespace

std::string_view to_string(WireMessage m) {
  switch (m) {
    case WireMessage::Hello:
      return "hello";
    case WireMessage::Msg1:
      return "msg1";
    case WireMessage::Msg2:
      return "msg2";
    case WireMessage::Msg3a:
      return "msg3a";
    case WireMessage::Msg3b:
      return "msg3b";
  }
  return "unknown";
}

std::string_view segment_name(WireMessage m) {
  switch (m) {
    case WireMessage::Hello:
    case WireMessage::Msg1:
      return "1";
    case WireMessage::Msg2:
      return "2";
    case WireMessage::Msg3a:
      return "3a";
    case WireMessage::Msg3b:
      return "3b";
  }
  return "?";
}

WireMessage wire_message_from_string(std::string_view s) {
  for (auto m : {WireMessage::Hello, WireMessage::Msg1, WireMessage::Msg2, WireMessage::Msg3a,
                 WireMessage::Msg3b}) {
    if (s == to_string(m)) return m;
  }
  if (s == "1") return WireMessage::Msg1;
  if (s == "2") return WireMessage::Msg2;
  if (s == "3a") return WireMessage::Msg3a;
  if (s == "3b") return WireMessage::Msg3b;
  throw Error(Errc::Malformed, "unknown wire message '" + std::string(s) + "'");
}

std::string_view to_string(FaultKind k) {
  switch (k) {
    case FaultKind::Drop:
      return "drop";
    case FaultKind::Corrupt:
      return "corrupt";
    case FaultKind::Replay:
      return "replay";
    case FaultKind::Reorder:
      return "reorder";
  }
  return "unknown";
}

FaultKind fault_kind_from_string(std::string_view s) {
  for (auto k : {FaultKind::Drop, FaultKind::Corrupt, FaultKind::Replay, FaultKind::Reorder}) {
    if (s == to_string(k)) return k;
  }
  throw Error(Errc::Malformed, "unknown fault kind '" + std::string(s) + "'");
}

// Wire encoding ------------------------------------------------------------

Bytes ProvisionMessage::body_bytes() const {
  ByteWriter w;
  std::visit(Overloaded{
                 [&](const Hello& m) { w.raw(m.server_nonce); },
                 [&](const Msg1& m) {
                   w.raw(msg1_body(m.server_nonce, m.device_nonce, m.device_public_key,
                                   m.mutual_mac));
                 },
                 [&](const Msg2& m) { m.key_packet.write(w); },
                 [&](const Msg3a& m) { w.raw(m.proof.old_tag.bytes).raw(m.proof.new_tag.bytes); },
                 [&](const Msg3b& m) { m.commit_stream.write(w); },
             },
             body);
  return std::move(w).take();
}

Bytes ProvisionMessage::encode() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind())).u64(session_id).lp(body_bytes());
  ByteWriter framed;
  framed.lp(w.bytes());
  return std::move(framed).take();
}

ProvisionMessage ProvisionMessage::decode(ByteView frame) {
  ByteReader outer(frame);
  auto payload = outer.lp();
  outer.expect_done();
  ByteReader r(payload);
  ProvisionMessage m;
  auto ordinal = r.u8();
  m.session_id = r.u64();
  auto body = r.lp();
  r.expect_done();
  ByteReader b(body);
  switch (ordinal) {
    case 0:
      m.body = Hello{b.fixed<crypto::kNonceSize>()};
      break;
    case 1: {
      Msg1 v;
      v.server_nonce = b.fixed<crypto::kNonceSize>();
      v.device_nonce = b.fixed<crypto::kNonceSize>();
      v.device_public_key = b.fixed<crypto::kPublicKeySize>();
      v.mutual_mac.bytes = b.fixed<crypto::kMacTagSize>();
      m.body = v;
      break;
    }
    case 2:
      m.body = Msg2{SealedPacket::read(b)};
      break;
    case 3: {
      Msg3a v;
      v.proof.old_tag.bytes = b.fixed<crypto::kMacTagSize>();
      v.proof.new_tag.bytes = b.fixed<crypto::kMacTagSize>();
      m.body = v;
      break;
    }
    case 4:
      m.body = Msg3b{SealedPacket::read(b)};
      break;
    default:
      throw Error(Errc::Malformed, "unknown segment ordinal");
  }
  b.expect_done();
  return m;
}

// Device side ----------------------------------------------------------------

void DeviceEndpoint::arm(Millis now, Millis timeout) {
  timeout_ = timeout;
  deadline_ = now + timeout;
}

WireMessage DeviceEndpoint::expected() const {
  switch (state_) {
    case State::AwaitHello:
      return WireMessage::Hello;
    case State::AwaitMsg2:
      return WireMessage::Msg2;
    default:
      return WireMessage::Msg3b;
  }
}

std::optional<Millis> DeviceEndpoint::deadline() const {
  if (state_ == State::Done) return std::nullopt;
  return deadline_;
}

void DeviceEndpoint::fail(Errc e, WireMessage at) {
  state_ = State::Done;
  result_ = {true, false, e, at};
  // Discards any pending configuration; the active one is untouched.
  try {
    chip_.provision_abort();
  } catch (const Error&) {
  }
}

std::vector<ProvisionMessage> DeviceEndpoint::on_bytes(ByteView frame, Millis now) {
  if (state_ == State::Done) return {};
  ProvisionMessage msg;
  try {
    msg = ProvisionMessage::decode(frame);
  } catch (const Error&) {
    fail(Errc::Malformed, expected());
    return {};
  }
  bool in_order = msg.kind() == expected() &&
                  (state_ == State::AwaitHello || msg.session_id == session_id_);
  if (!in_order) {
    fail(Errc::OutOfOrder, expected());
    return {};
  }

  try {
    switch (state_) {
      case State::AwaitHello: {
        session_id_ = msg.session_id;
        const auto& hello = std::get<Hello>(msg.body);
        auto begin = chip_.provision_begin(hello.server_nonce);
        state_ = State::AwaitMsg2;
        deadline_ = now + timeout_;
        return {ProvisionMessage{session_id_, Msg1{hello.server_nonce, begin.device_nonce,
                                                   begin.public_key, begin.tag}}};
      }
      case State::AwaitMsg2: {
        chip_.provision_install(std::get<Msg2>(msg.body).key_packet);
        auto proof = chip_.supersession_proof();
        state_ = State::AwaitMsg3b;
        deadline_ = now + timeout_;
        return {ProvisionMessage{session_id_, Msg3a{proof}}};
      }
      case State::AwaitMsg3b: {
        chip_.provision_commit(std::get<Msg3b>(msg.body).commit_stream);
        state_ = State::Done;
        result_ = {true, true, Errc::Ok, std::nullopt};
        return {};
      }
      case State::Done:
        break;
    }
  } catch (const Error& e) {
    fail(e.code(), expected());
  }
  return {};
}

void DeviceEndpoint::on_timeout(Millis now) {
  if (state_ == State::Done || now < deadline_) return;
  fail(Errc::Timeout, expected());
}

// Registrar side -------------------------------------------------------------

RegistrarEndpoint::RegistrarEndpoint(RegistrarPlan plan, RandomSource& rng)
    : plan_(std::move(plan)), rng_(rng) {}

WireMessage RegistrarEndpoint::expected() const {
  return state_ == State::AwaitMsg1 ? WireMessage::Msg1 : WireMessage::Msg3a;
}

std::optional<Millis> RegistrarEndpoint::deadline() const {
  if (state_ == State::Done) return std::nullopt;
  return deadline_;
}

void RegistrarEndpoint::fail(Errc e, WireMessage at) {
  state_ = State::Done;
  result_ = {true, false, e, at};
}

ProvisionMessage RegistrarEndpoint::start(Millis now, Millis timeout) {
  timeout_ = timeout;
  deadline_ = now + timeout;
  server_nonce_ = rng_.array<crypto::kNonceSize>();
  state_ = State::AwaitMsg1;
  return ProvisionMessage{plan_.session_id, Hello{server_nonce_}};
}

std::vector<ProvisionMessage> RegistrarEndpoint::on_bytes(ByteView frame, Millis now) {
  if (state_ == State::Done) return {};
  Errc decode_failure = state_ == State::AwaitMsg1 ? Errc::ChallengeFailure
                                                   : Errc::SupersessionFailure;
  ProvisionMessage msg;
  try {
    msg = ProvisionMessage::decode(frame);
  } catch (const Error&) {
    fail(decode_failure, expected());
    return {};
  }
  if (msg.kind() != expected() || msg.session_id != plan_.session_id) {
    fail(Errc::OutOfOrder, expected());
    return {};
  }

  if (state_ == State::AwaitMsg1) {
    const auto& m1 = std::get<Msg1>(msg.body);
    auto expect_mac =
        mutual_mac(plan_.current_key, server_nonce_, m1.device_nonce, m1.device_public_key);
    if (m1.server_nonce != server_nonce_ || !(m1.mutual_mac == expect_mac)) {
      fail(Errc::ChallengeFailure, WireMessage::Msg1);
      return {};
    }
    device_public_key_ = m1.device_public_key;
    msg1_body_ = msg.body_bytes();

    KeyPacket packet{plan_.new_key, plan_.current_config_id + 1, plan_.device_id};
    auto skey = session_key(plan_.current_key, server_nonce_, m1.device_nonce);
    auto sealed = crypto::aead_seal(skey, rng_.array<crypto::kNonceSize>(), packet.encode());
    transcript_ = transcript_digest(msg1_body_, sealed.encode());
    state_ = State::AwaitMsg3a;
    deadline_ = now + timeout_;
    return {ProvisionMessage{plan_.session_id, Msg2{std::move(sealed)}}};
  }

  const auto& m3a = std::get<Msg3a>(msg.body);
  auto expect_proof = supersession_proof(plan_.current_key, plan_.new_key, *transcript_);
  if (!(m3a.proof.old_tag == expect_proof.old_tag) ||
      !(m3a.proof.new_tag == expect_proof.new_tag)) {
    fail(Errc::SupersessionFailure, WireMessage::Msg3a);
    return {};
  }
  std::uint32_t new_id = plan_.current_config_id + 1;
  CommitStream stream{*transcript_, new_id,
                      commit_old_key_tag(plan_.current_key, *transcript_, m3a.proof, new_id)};
  auto sealed = crypto::aead_seal(plan_.new_key, rng_.array<crypto::kNonceSize>(), stream.encode());
  commit_sent_ = true;
  state_ = State::Done;
  result_ = {true, false, Errc::Ok, std::nullopt};
  return {ProvisionMessage{plan_.session_id, Msg3b{std::move(sealed)}}};
}

void RegistrarEndpoint::on_timeout(Millis now) {
  if (state_ == State::Done || now < deadline_) return;
  fail(Errc::Timeout, expected());
}

void RegistrarEndpoint::confirm(chip::ChipClient& chip, const LogicalClock& clock) {
  auto challenge = rng_.bytes(crypto::kNonceSize);
  Millis issued = clock.now();
  auto tag = chip.challenge_respond(challenge, issued, kConfirmDeadlineMs);
  if (commit_sent_ && tag == crypto::mac_compute(plan_.new_key, "challenge", challenge, issued)) {
    result_.committed = true;
    return;
  }
  if (tag == crypto::mac_compute(plan_.current_key, "challenge", challenge, issued)) {
    result_.committed = false;
    if (result_.error == Errc::Ok) {
      result_.error = Errc::SupersessionFailure;
      result_.failed_at = WireMessage::Msg3b;
    }
    return;
  }
  if (!device_public_key_) {
    // Never authenticated: a foreign chip, holding neither key, which was
    // never sent a key packet.
    result_.committed = false;
    if (result_.error == Errc::Ok) {
      result_.error = Errc::ChallengeFailure;
      result_.failed_at = WireMessage::Msg1;
    }
    return;
  }
  throw Error(Errc::Inconsistent, "chip answers under neither configuration");
}

// Driver ---------------------------------------------------------------------

ProvisioningTrace run_provisioning(DeviceEndpoint& device, RegistrarEndpoint& registrar,
                                   chip::ChipClient& chip, const FaultPlan& plan,
                                   LogicalClock& clock) {
  struct Delivery {
    Party to;
    WireMessage kind;
    Bytes bytes;
  };

  ProvisioningTrace trace;
  DeterministicRandom fault_rng(plan.seed, "esp-fault-plan");
  std::vector<bool> applied(plan.faults.size(), false);
  std::deque<Delivery> queue;
  std::vector<Delivery> held;

  auto log = [&](std::string text) { trace.events.push_back({clock.now(), std::move(text)}); };
  auto party_name = [](Party p) { return p == Party::Device ? "device" : "registrar"; };

  auto send = [&](Party from, const ProvisionMessage& m) {
    Party to = from == Party::Device ? Party::Registrar : Party::Device;
    Bytes bytes = m.encode();
    auto kind = m.kind();
    trace.sent[kind] = bytes;
    log(std::string(party_name(from)) + " sends " + std::string(to_string(kind)));

    std::optional<FaultKind> fault;
    for (std::size_t i = 0; i < plan.faults.size(); ++i) {
      if (!applied[i] && plan.faults[i].target == kind) {
        applied[i] = true;
        fault = plan.faults[i].kind;
        break;
      }
    }
    if (!fault) {
      queue.push_back({to, kind, std::move(bytes)});
      return;
    }
    switch (*fault) {
      case FaultKind::Drop:
        log("fault: drop " + std::string(to_string(kind)));
        break;
      case FaultKind::Corrupt: {
        // Header is 4 (frame) + 1 (ordinal) + 8 (session) + 4 (body length).
        constexpr std::size_t kHeader = 17;
        std::size_t span = bytes.size() > kHeader ? bytes.size() - kHeader : bytes.size();
        std::size_t base = bytes.size() > kHeader ? kHeader : 0;
        std::size_t pos = base + static_cast<std::size_t>(fault_rng.next_u64() % span);
        auto bit = static_cast<std::uint8_t>(1u << (fault_rng.next_u64() % 8));
        bytes[pos] ^= bit;
        log("fault: corrupt " + std::string(to_string(kind)) + " byte " + std::to_string(pos));
        queue.push_back({to, kind, std::move(bytes)});
        break;
      }
      case FaultKind::Replay: {
        if (auto it = plan.stale.find(kind); it != plan.stale.end()) {
          auto stale = ProvisionMessage::decode(it->second);
          stale.session_id = m.session_id;
          log("fault: replay stale " + std::string(to_string(kind)));
          queue.push_back({to, kind, stale.encode()});
        } else {
          log("fault: replay duplicate " + std::string(to_string(kind)));
          queue.push_back({to, kind, bytes});
          queue.push_back({to, kind, std::move(bytes)});
        }
        break;
      }
      case FaultKind::Reorder:
        log("fault: delay " + std::string(to_string(kind)) + " past the receiver's next event");
        held.push_back({to, kind, std::move(bytes)});
        break;
    }
  };

  // Tracks which failures were already folded into the trace.
  bool device_seen = false;
  bool registrar_seen = false;
  auto collect = [&] {
    std::optional<std::pair<Errc, WireMessage>> best;
    auto consider = [&](const EndpointResult& r, bool& seen, Party p) {
      if (seen || !r.done || r.error == Errc::Ok || !r.failed_at) return;
      seen = true;
      log(std::string(party_name(p)) + " failed: " + std::string(gridtrust::to_string(r.error)) +
          " at segment " + std::string(segment_name(*r.failed_at)));
      if (!best || segment_rank(*r.failed_at) < segment_rank(best->second)) {
        best = {r.error, *r.failed_at};
      }
    };
    consider(device.result(), device_seen, Party::Device);
    consider(registrar.result(), registrar_seen, Party::Registrar);
    if (best && trace.error == Errc::Ok) {
      trace.error = normalize(best->first, best->second);
      trace.failed_at = best->second;
    }
  };

  device.arm(clock.now(), plan.segment_timeout);
  send(Party::Registrar, registrar.start(clock.now(), plan.segment_timeout));

  for (int round = 0; round < 64; ++round) {
    while (!queue.empty()) {
      auto d = std::move(queue.front());
      queue.pop_front();
      bool was_done = d.to == Party::Device ? device.result().done : registrar.result().done;
      log("deliver " + std::string(to_string(d.kind)) + " to " + party_name(d.to) +
          (was_done ? " (ignored: session closed)" : ""));
      auto out = d.to == Party::Device ? device.on_bytes(d.bytes, clock.now())
                                       : registrar.on_bytes(d.bytes, clock.now());
      collect();
      for (const auto& m : out) send(d.to, m);
    }
    if (device.result().done && registrar.result().done && held.empty()) break;

    std::optional<Millis> next;
    for (auto dl : {device.deadline(), registrar.deadline()}) {
      if (dl && (!next || *dl < *next)) next = dl;
    }
    if (next) {
      if (*next > clock.now()) clock.set(*next);
      log("timeout tick");
      device.on_timeout(clock.now());
      registrar.on_timeout(clock.now());
      collect();
    }
    for (auto& h : held) queue.push_back(std::move(h));
    held.clear();
  }

  registrar.confirm(chip, clock);
  if (!registrar_seen) collect();
  auto status = chip.status();
  trace.final_lifecycle = status.lifecycle;
  trace.final_config_id = status.config_id;
  trace.device = device.result();
  trace.registrar = registrar.result();
  log("confirmed: registrar " + std::string(trace.registrar.committed ? "committed" : "rolled back") +
      ", chip " + std::string(chip::to_string(status.lifecycle)) + " config " +
      std::to_string(status.config_id));
  return trace;
}

}  // namespace gridtrust::esp
