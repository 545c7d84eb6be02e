#include "gridtrust/iur.hpp"

namespace gridtrust::iur {

namespace {

Digest digest_of(std::initializer_list<ByteView> parts) { return crypto::sha3_512(parts); }

Bytes be64(std::uint64_t v) {
  ByteWriter w;
  w.u64(v);
  return std::move(w).take();
}

}  // namespace

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Registered:
      return "Registered";
    case EventKind::Challenged:
      return "Challenged";
    case EventKind::KeyPacketIssued:
      return "KeyPacketIssued";
    case EventKind::Committed:
      return "Committed";
    case EventKind::RolledBack:
      return "RolledBack";
    case EventKind::CertIssued:
      return "CertIssued";
    case EventKind::CertRevoked:
      return "CertRevoked";
    case EventKind::UpdateAuthorized:
      return "UpdateAuthorized";
  }
  return "Unknown";
}

Bytes ProvisioningEvent::payload() const {
  ByteWriter w;
  w.lp(device_id).u8(static_cast<std::uint8_t>(kind)).u64(timestamp).raw(payload_digest);
  return std::move(w).take();
}

ProvisioningEvent ProvisioningEvent::from_entry(const ChainEntry& entry) {
  ProvisioningEvent e;
  e.sequence_no = entry.index();
  ByteReader r(entry.payload());
  e.device_id = r.lp_string();
  auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(EventKind::UpdateAuthorized)) {
    throw Error(Errc::Malformed, "unknown event kind");
  }
  e.kind = static_cast<EventKind>(kind);
  e.timestamp = r.u64();
  e.payload_digest = r.fixed<crypto::kDigestSize>();
  r.expect_done();
  e.prev_hash = entry.prev_hash;
  e.this_hash = entry.this_hash;
  return e;
}

Bytes Certificate::tbs() const {
  ByteWriter w;
  w.lp(std::string_view("gridtrust-cert-v1")).u64(serial).lp(subject_id).raw(subject_public_key);
  return std::move(w).take();
}

void Certificate::write(ByteWriter& w) const {
  w.u64(serial).lp(subject_id).raw(subject_public_key).raw(issuer_signature.bytes);
}

Certificate Certificate::read(ByteReader& r) {
  Certificate c;
  c.serial = r.u64();
  c.subject_id = r.lp_string();
  c.subject_public_key = r.fixed<crypto::kPublicKeySize>();
  c.issuer_signature.bytes = r.fixed<crypto::kSignatureSize>();
  return c;
}

Bytes Certificate::encode() const {
  ByteWriter w;
  write(w);
  return std::move(w).take();
}

Certificate Certificate::decode(ByteView data) {
  ByteReader r(data);
  auto c = read(r);
  r.expect_done();
  return c;
}

bool certificate_signature_valid(const Certificate& cert, const PublicKey& ca_key) {
  return crypto::verify(ca_key, cert.tbs(), cert.issuer_signature);
}

IurService::IurService(LogicalClock& clock, RandomSource& rng, const crypto::Seed& ca_seed)
    : clock_(clock), rng_(rng), ca_(crypto::keypair_generate(ca_seed)) {}

void IurService::append_event(const std::string& device_id, EventKind kind,
                              const Digest& payload_digest) {
  ProvisioningEvent e;
  e.device_id = device_id;
  e.kind = kind;
  e.timestamp = clock_.now();
  e.payload_digest = payload_digest;
  ledger_.append(e.payload());
}

DeviceRecord IurService::register_device(const std::string& device_id,
                                         const SymmetricKey& shared_secret,
                                         std::optional<std::string> key_group) {
  std::lock_guard lock(mu_);
  if (devices_.contains(device_id)) throw Error(Errc::DuplicateDevice, device_id);
  DeviceRecord rec;
  rec.device_id = device_id;
  rec.shared_secret = shared_secret;
  rec.current_key = shared_secret;
  rec.key_group = std::move(key_group);
  devices_.emplace(device_id, rec);
  append_event(device_id, EventKind::Registered, digest_of({as_bytes(device_id)}));
  return rec;
}

void IurService::rotate_group_key(const std::string& key_group) {
  std::lock_guard lock(mu_);
  group_keys_.erase(key_group);
}

ProvisioningOutcome IurService::provision_device(const std::string& device_id,
                                                 chip::ChipPipe channel,
                                                 const esp::FaultPlan& plan) {
  esp::RegistrarPlan rplan;
  {
    std::lock_guard lock(mu_);
    auto it = devices_.find(device_id);
    if (it == devices_.end()) throw Error(Errc::UnknownDevice, device_id);
    if (busy_.contains(device_id)) throw Error(Errc::SessionBusy, device_id);
    busy_.insert(device_id);

    const auto& rec = it->second;
    rplan.session_id = next_session_++;
    rplan.device_id = device_id;
    rplan.current_key = rec.current_key;
    rplan.current_config_id = rec.current_config_id;
    if (rec.key_group) {
      auto g = group_keys_.find(*rec.key_group);
      if (g == group_keys_.end() || g->second == rec.current_key) {
        g = group_keys_.insert_or_assign(*rec.key_group, SymmetricKey(rng_.bytes(64))).first;
      }
      rplan.new_key = g->second;
    } else {
      rplan.new_key = SymmetricKey(rng_.bytes(crypto::kSymmetricKeySize));
    }
  }

  ProvisioningOutcome outcome;
  try {
    chip::ChipClient client(std::move(channel));
    esp::DeviceEndpoint device(client);
    esp::RegistrarEndpoint registrar(rplan, rng_);
    outcome.trace = esp::run_provisioning(device, registrar, client, plan, clock_);
    outcome.committed = registrar.result().committed;
    outcome.error = outcome.trace.error;
    outcome.failed_at = outcome.trace.failed_at;
    if (outcome.committed) outcome.error = Errc::Ok;

    std::lock_guard lock(mu_);
    auto& rec = devices_.at(device_id);
    append_event(device_id, EventKind::Challenged, digest_of({be64(rplan.session_id)}));
    if (auto m2 = outcome.trace.sent.find(esp::WireMessage::Msg2); m2 != outcome.trace.sent.end()) {
      append_event(device_id, EventKind::KeyPacketIssued, digest_of({m2->second}));
    }
    if (outcome.committed) {
      rec.current_key = rplan.new_key;
      rec.current_config_id = rplan.current_config_id + 1;
      rec.lifecycle = chip::Lifecycle::ApplicationProvisioned;
      rec.enrolled_public_key = registrar.device_public_key();
      ByteWriter w;
      w.u32(rec.current_config_id).raw(*rec.enrolled_public_key);
      append_event(device_id, EventKind::Committed, digest_of({w.bytes()}));
    } else {
      ByteWriter w;
      w.u16(static_cast<std::uint16_t>(outcome.error))
          .u8(outcome.failed_at ? static_cast<std::uint8_t>(*outcome.failed_at) : 0xff);
      append_event(device_id, EventKind::RolledBack, digest_of({w.bytes()}));
    }
    outcome.config_id = rec.current_config_id;
    busy_.erase(device_id);
  } catch (...) {
    std::lock_guard lock(mu_);
    busy_.erase(device_id);
    throw;
  }
  return outcome;
}

Certificate IurService::issue_certificate(const std::string& subject_id,
                                          const PublicKey& public_key) {
  std::lock_guard lock(mu_);
  if (!devices_.contains(subject_id)) throw Error(Errc::UnknownSubject, subject_id);
  Certificate cert;
  cert.serial = next_serial_++;
  cert.subject_id = subject_id;
  cert.subject_public_key = public_key;
  cert.issuer_signature = crypto::sign(ca_.private_seed, cert.tbs());
  certificates_.emplace(cert.serial, cert);
  append_event(subject_id, EventKind::CertIssued, digest_of({cert.encode()}));
  return cert;
}

void IurService::revoke_certificate(std::uint64_t serial) {
  std::lock_guard lock(mu_);
  auto it = certificates_.find(serial);
  if (it == certificates_.end()) throw Error(Errc::UnknownSerial, std::to_string(serial));
  revoked_.insert(serial);
  append_event(it->second.subject_id, EventKind::CertRevoked, digest_of({be64(serial)}));
}

bool IurService::crl_check(std::uint64_t serial) const {
  std::lock_guard lock(mu_);
  return revoked_.contains(serial);
}

std::vector<std::uint64_t> IurService::crl() const {
  std::lock_guard lock(mu_);
  return {revoked_.begin(), revoked_.end()};
}

UpdateAuthorization IurService::authorize_update(const std::string& device_id,
                                                 const Digest& package_digest) {
  std::lock_guard lock(mu_);
  if (!devices_.contains(device_id)) throw Error(Errc::UnknownDevice, device_id);
  UpdateAuthorization auth;
  auth.package_digest = package_digest;
  auth.target_device_id = device_id;
  auth.single_use_code = rng_.array<32>();
  updates_.push_back(auth);
  append_event(device_id, EventKind::UpdateAuthorized,
               digest_of({package_digest, as_bytes(device_id)}));
  return auth;
}

bool IurService::consume_update_code(const std::string& device_id, const Digest& package_digest,
                                     const UpdateCode& code) {
  std::lock_guard lock(mu_);
  if (!devices_.contains(device_id)) throw Error(Errc::UnknownDevice, device_id);
  for (auto& auth : updates_) {
    if (auth.target_device_id != device_id ||
        !crypto::constant_time_equal(auth.single_use_code, code)) {
      continue;
    }
    if (auth.consumed) throw Error(Errc::CodeAlreadyConsumed);
    if (auth.package_digest != package_digest) throw Error(Errc::DigestMismatch);
    auth.consumed = true;
    return true;
  }
  return false;
}

ChainVerdict IurService::ledger_verify() const {
  std::lock_guard lock(mu_);
  return ledger_.verify();
}

bool IurService::poo_verify(ByteView data, const Signature& signature,
                            const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it == devices_.end()) throw Error(Errc::UnknownDevice, device_id);
  if (!it->second.enrolled_public_key) throw Error(Errc::NoEnrolledKey, device_id);
  return crypto::verify(*it->second.enrolled_public_key, data, signature);
}

std::optional<DeviceRecord> IurService::find_device(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> IurService::device_for_public_key(const PublicKey& key) const {
  std::lock_guard lock(mu_);
  for (const auto& [id, rec] : devices_) {
    if (rec.enrolled_public_key && *rec.enrolled_public_key == key) return id;
  }
  return std::nullopt;
}

HashChain IurService::ledger_snapshot() const {
  std::lock_guard lock(mu_);
  return ledger_;
}

std::vector<ProvisioningEvent> IurService::events() const {
  std::lock_guard lock(mu_);
  std::vector<ProvisioningEvent> out;
  for (std::size_t i = 0; i < ledger_.size(); ++i) {
    out.push_back(ProvisioningEvent::from_entry(ledger_.entry(i)));
  }
  return out;
}

}  // namespace gridtrust::iur
