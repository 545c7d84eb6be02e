#include "gridtrust/chip.hpp"

namespace gridtrust::chip {

std::string_view to_string(Lifecycle l) {
  switch (l) {
    case Lifecycle::SupplyChainProvisioned:
      return "SupplyChainProvisioned";
    case Lifecycle::SupersessionPending:
      return "SupersessionPending";
    case Lifecycle::ApplicationProvisioned:
      return "ApplicationProvisioned";
  }
  return "Unknown";
}

CtcChip::CtcChip(ChipIdentity identity, const LogicalClock& clock, RandomSource& rng)
    : clock_(clock),
      rng_(rng),
      device_id_(std::move(identity.device_id)),
      identity_(crypto::keypair_generate(identity.identity_seed)),
      active_{identity.supply_chain_secret, 0} {}

Lifecycle CtcChip::lifecycle() const {
  if (pending_) return Lifecycle::SupersessionPending;
  return application_key_active() ? Lifecycle::ApplicationProvisioned
                                  : Lifecycle::SupplyChainProvisioned;
}

void CtcChip::rollback() {
  pending_.reset();
  session_.reset();
}

ChipResponse CtcChip::execute(const ChipCommand& cmd) {
  std::lock_guard lock(mu_);
  ChipResponse resp;
  resp.correlation_id = cmd.correlation_id;
  try {
    resp.body = std::visit([this](const auto& c) { return handle(c); }, cmd.body);
  } catch (const Error& e) {
    resp.status = e.code();
    resp.body = std::monostate{};
  }
  return resp;
}

Bytes CtcChip::execute_frame(ByteView frame) {
  ChipCommand cmd;
  try {
    cmd = decode_command(frame);
  } catch (const Error& e) {
    return encode(ChipResponse{0, e.code(), std::monostate{}});
  }
  return encode(execute(cmd));
}

ResponseBody CtcChip::handle(const GetPublicKey&) { return PublicKeyResult{identity_.public_key}; }

ResponseBody CtcChip::handle(const GetStatus&) {
  return StatusResult{device_id_, lifecycle(), active_.config_id, mac_counter_};
}

ResponseBody CtcChip::handle(const SignMessage& c) {
  return SignatureResult{crypto::sign(identity_.private_seed, c.message)};
}

ResponseBody CtcChip::handle(const MacNext& c) {
  if (!application_key_active()) throw Error(Errc::NotProvisioned);
  std::uint64_t counter = mac_counter_++;
  return MacResult{counter, crypto::mac_compute(active_.key, c.context, c.message, counter)};
}

ResponseBody CtcChip::handle(const MacCheck& c) {
  if (!application_key_active()) throw Error(Errc::NotProvisioned);
  std::uint64_t last = 0;
  if (auto it = last_accepted_.find(c.context); it != last_accepted_.end()) last = it->second;
  bool fresh = c.counter > last && c.counter - last <= c.window;
  bool ok = crypto::mac_verify(active_.key, c.context, c.message, c.counter, c.tag);
  if (!(fresh && ok)) return CheckResult{false};
  last_accepted_[c.context] = c.counter;
  return CheckResult{true};
}

ResponseBody CtcChip::handle(const ChallengeRespond& c) {
  Millis now = clock_.now();
  Millis elapsed = now > c.issued_at ? now - c.issued_at : 0;
  if (elapsed > c.deadline_ms) throw Error(Errc::DeadlineExceeded);
  return TagResult{crypto::mac_compute(active_.key, "challenge", c.challenge, c.issued_at)};
}

ResponseBody CtcChip::handle(const ProvisionBegin& c) {
  // A fresh exchange supersedes any half-finished one.
  rollback();
  Session s;
  s.server_nonce = c.server_nonce;
  s.device_nonce = rng_.array<crypto::kNonceSize>();
  auto tag = esp::mutual_mac(active_.key, s.server_nonce, s.device_nonce, identity_.public_key);
  s.msg1 = esp::msg1_body(s.server_nonce, s.device_nonce, identity_.public_key, tag);
  BeginResult out{s.device_nonce, identity_.public_key, tag};
  session_ = std::move(s);
  return out;
}

ResponseBody CtcChip::handle(const ProvisionInstall& c) {
  if (!session_) throw Error(Errc::SessionMissing);
  if (pending_) throw Error(Errc::AuthenticationFailure, "key packet already installed");
  auto key = esp::session_key(active_.key, session_->server_nonce, session_->device_nonce);
  auto plain = crypto::aead_open(key, c.packet);
  esp::KeyPacket packet;
  try {
    packet = esp::KeyPacket::decode(plain);
  } catch (const Error&) {
    throw Error(Errc::AuthenticationFailure, "undecodable key packet");
  }
  if (packet.device_id != device_id_ || packet.config_id != active_.config_id + 1) {
    throw Error(Errc::AuthenticationFailure, "key packet not addressed to this configuration");
  }
  auto transcript = esp::transcript_digest(session_->msg1, c.packet.encode());
  session_->transcript = transcript;
  pending_ = SymmetricKeyConfig{packet.key, packet.config_id};
  return TagResult{esp::install_ack(packet.key, transcript)};
}

ResponseBody CtcChip::handle(const SupersessionProof&) {
  if (!pending_ || !session_ || !session_->transcript) throw Error(Errc::NotPending);
  return ProofResult{esp::supersession_proof(active_.key, pending_->key, *session_->transcript)};
}

ResponseBody CtcChip::handle(const ProvisionCommit& c) {
  if (!pending_ || !session_ || !session_->transcript) throw Error(Errc::NotPending);
  const auto& transcript = *session_->transcript;
  bool verified = false;
  try {
    auto stream = esp::CommitStream::decode(crypto::aead_open(pending_->key, c.commit_stream));
    auto proof = esp::supersession_proof(active_.key, pending_->key, transcript);
    verified = stream.transcript == transcript && stream.config_id == pending_->config_id &&
               stream.old_key_tag ==
                   esp::commit_old_key_tag(active_.key, transcript, proof, stream.config_id);
  } catch (const Error&) {
    verified = false;
  }
  if (!verified) {
    rollback();
    throw Error(Errc::SupersessionVerificationFailure);
  }
  active_ = *pending_;
  rollback();
  return CommitResult{lifecycle(), active_.config_id};
}

ResponseBody CtcChip::handle(const ProvisionAbort&) {
  rollback();
  return CommitResult{lifecycle(), active_.config_id};
}

ResponseBody CtcChip::handle(const DeriveSessionKey& c) {
  if (!application_key_active()) throw Error(Errc::NotProvisioned);
  return SessionKeyResult{
      crypto::kdf_derive(active_.key.secret_bytes(), c.label, c.nonce_a, c.nonce_b)};
}

ChipPipe direct_pipe(CtcChip& chip) {
  return [&chip](ByteView frame) { return chip.execute_frame(frame); };
}

ChipResponse ChipClient::call(CommandBody body) {
  ChipCommand cmd{next_correlation_++, std::move(body)};
  auto resp = decode_response(pipe_(encode(cmd)));
  if (resp.correlation_id != cmd.correlation_id && resp.status == Errc::Ok) {
    throw Error(Errc::Malformed, "correlation id mismatch");
  }
  return resp;
}

template <typename T>
T ChipClient::expect(CommandBody body) {
  auto resp = call(std::move(body));
  if (resp.status != Errc::Ok) throw Error(resp.status);
  if (auto* v = std::get_if<T>(&resp.body)) return *v;
  throw Error(Errc::Malformed, "unexpected chip response type");
}

PublicKey ChipClient::public_key() { return expect<PublicKeyResult>(GetPublicKey{}).public_key; }

StatusResult ChipClient::status() { return expect<StatusResult>(GetStatus{}); }

Signature ChipClient::sign(ByteView message) {
  return expect<SignatureResult>(SignMessage{{message.begin(), message.end()}}).signature;
}

MacResult ChipClient::mac_next(std::string_view context, ByteView message) {
  return expect<MacResult>(MacNext{std::string(context), {message.begin(), message.end()}});
}

bool ChipClient::mac_check(std::string_view context, ByteView message, std::uint64_t counter,
                           const MacTag& tag, std::uint64_t window) {
  return expect<CheckResult>(
             MacCheck{std::string(context), {message.begin(), message.end()}, counter, tag, window})
      .accepted;
}

MacTag ChipClient::challenge_respond(ByteView challenge, Millis issued_at,
                                     std::uint32_t deadline_ms) {
  return expect<TagResult>(
             ChallengeRespond{{challenge.begin(), challenge.end()}, issued_at, deadline_ms})
      .tag;
}

BeginResult ChipClient::provision_begin(const Nonce& server_nonce) {
  return expect<BeginResult>(ProvisionBegin{server_nonce});
}

MacTag ChipClient::provision_install(const SealedPacket& packet) {
  return expect<TagResult>(ProvisionInstall{packet}).tag;
}

esp::ProofPair ChipClient::supersession_proof() {
  return expect<ProofResult>(SupersessionProof{}).proof;
}

CommitResult ChipClient::provision_commit(const SealedPacket& commit_stream) {
  return expect<CommitResult>(ProvisionCommit{commit_stream});
}

void ChipClient::provision_abort() { expect<CommitResult>(ProvisionAbort{}); }

SymmetricKey ChipClient::derive_session_key(std::string_view label, ByteView nonce_a,
                                            ByteView nonce_b) {
  return expect<SessionKeyResult>(DeriveSessionKey{std::string(label),
                                                   {nonce_a.begin(), nonce_a.end()},
                                                   {nonce_b.begin(), nonce_b.end()}})
      .session_key;
}

}  // namespace gridtrust::chip
