#include "gridtrust/te_ledger.hpp"

#include <cstdio>

namespace gridtrust::te {

namespace {

enum class BlockKind : std::uint8_t { Transaction = 0, Clearing = 1, Enrollment = 2 };

std::string round_key(std::uint32_t round) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%010u", round);
  return buf;
}

std::string bid_key(const Bid& b) {
  return "bid/" + round_key(b.round) + "/" + b.prosumer_id + "/" + std::string(to_string(b.kind));
}
std::string clearing_key(std::uint32_t round) { return "clearing/" + round_key(round); }
std::string billing_key(std::uint32_t round, const std::string& prosumer) {
  return "billing/" + round_key(round) + "/" + prosumer;
}

}  // namespace

std::string_view to_string(Function f) {
  switch (f) {
    case Function::SubmitBid:
      return "SubmitBid";
    case Function::GetDispatch:
      return "GetDispatch";
    case Function::QueryBilling:
      return "QueryBilling";
  }
  return "?";
}

Bytes DispatchRequest::encode() const {
  ByteWriter w;
  w.lp(prosumer_id).u32(round).u64(nonce);
  return std::move(w).take();
}

DispatchRequest DispatchRequest::decode(ByteView data) {
  ByteReader r(data);
  DispatchRequest d;
  d.prosumer_id = r.lp_string();
  d.round = r.u32();
  d.nonce = r.u64();
  r.expect_done();
  return d;
}

Bytes BillingQuery::encode() const {
  ByteWriter w;
  w.lp(prosumer_id).u32(from_round).u32(to_round).u64(nonce);
  return std::move(w).take();
}

BillingQuery BillingQuery::decode(ByteView data) {
  ByteReader r(data);
  BillingQuery q;
  q.prosumer_id = r.lp_string();
  q.from_round = r.u32();
  q.to_round = r.u32();
  q.nonce = r.u64();
  r.expect_done();
  return q;
}

Bytes SignedProposal::encode() const {
  ByteWriter w;
  client_certificate.write(w);
  w.u8(static_cast<std::uint8_t>(function))
      .lp(signed_message)
      .raw(chip_signature.bytes)
      .raw(chip_public_key);
  return std::move(w).take();
}

SignedProposal SignedProposal::decode(ByteView data) {
  ByteReader r(data);
  SignedProposal p;
  p.client_certificate = iur::Certificate::read(r);
  auto f = r.u8();
  if (f > 2) throw Error(Errc::Malformed, "function");
  p.function = static_cast<Function>(f);
  p.signed_message = r.lp();
  p.chip_signature.bytes = r.fixed<crypto::kSignatureSize>();
  p.chip_public_key = r.fixed<crypto::kPublicKeySize>();
  r.expect_done();
  return p;
}

Bytes BillingRecord::encode() const {
  ByteWriter w;
  w.lp(prosumer_id).u32(round).i64(dispatched_w).i64(energy_wh).i64(price).i64(amount_nano);
  return std::move(w).take();
}

BillingRecord BillingRecord::decode(ByteView data) {
  ByteReader r(data);
  BillingRecord b;
  b.prosumer_id = r.lp_string();
  b.round = r.u32();
  b.dispatched_w = r.i64();
  b.energy_wh = r.i64();
  b.price = r.i64();
  b.amount_nano = r.i64();
  r.expect_done();
  return b;
}

Bytes encode_billing(const std::vector<BillingRecord>& records) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& b : records) w.lp(b.encode());
  return std::move(w).take();
}

std::vector<BillingRecord> decode_billing(ByteView data) {
  ByteReader r(data);
  std::vector<BillingRecord> out(r.u32());
  for (auto& b : out) b = BillingRecord::decode(r.lp());
  r.expect_done();
  return out;
}

TeLedger::TeLedger(iur::IurService& registry, LogicalClock& clock, ClearingParams params)
    : registry_(registry), clock_(clock), params_(params) {}

void TeLedger::append_block(std::uint8_t kind, ByteView body) {
  ByteWriter w;
  w.u8(kind).u64(clock_.now()).lp(body);
  blocks_.append(w.bytes());
}

iur::Certificate TeLedger::enroll_client(const std::string& prosumer_id,
                                         const crypto::PublicKey& chip_public_key) {
  std::lock_guard lock(mu_);
  if (credentials_.contains(prosumer_id)) throw Error(Errc::DuplicateProsumer, prosumer_id);
  if (!registry_.device_for_public_key(chip_public_key)) {
    throw Error(Errc::UnknownChipKey, prosumer_id);
  }
  auto cert = registry_.issue_certificate(prosumer_id, chip_public_key);
  credentials_[prosumer_id] = Credential{cert, chip_public_key};
  append_block(static_cast<std::uint8_t>(BlockKind::Enrollment), cert.encode());
  return cert;
}

TeLedger::RwSet TeLedger::execute(const WorldState& state, const SignedProposal& p,
                                  bool perturb) const {
  RwSet rw;
  auto read = [&](const std::string& key) -> std::optional<Bytes> {
    auto it = state.find(key);
    std::optional<Bytes> v;
    if (it != state.end()) v = it->second;
    rw.reads[key] = v;
    return v;
  };
  try {
    switch (p.function) {
      case Function::SubmitBid: {
        auto bid = Bid::decode(p.signed_message);
        bid.validate();
        if (read(clearing_key(bid.round))) {
          throw Error(Errc::MalformedBid, "round already cleared");
        }
        auto key = bid_key(bid);
        if (read(key)) throw Error(Errc::DuplicateBid, key);
        rw.writes[key] = bid.encode();
        break;
      }
      case Function::GetDispatch: {
        auto req = DispatchRequest::decode(p.signed_message);
        auto cleared = read(clearing_key(req.round));
        if (!cleared) throw Error(Errc::NotCleared);
        auto result = ClearingResult::decode(*cleared);
        auto it = result.dispatch.find(req.prosumer_id);
        if (it == result.dispatch.end()) throw Error(Errc::UnknownProsumer, req.prosumer_id);
        rw.output = it->second.encode();
        rw.writes["fetch/" + round_key(req.round) + "/" + req.prosumer_id + "/" +
                  std::to_string(req.nonce)] = rw.output;
        break;
      }
      case Function::QueryBilling: {
        auto q = BillingQuery::decode(p.signed_message);
        std::vector<BillingRecord> rows;
        for (auto r = q.from_round; r <= q.to_round; ++r) {
          if (auto v = read(billing_key(r, q.prosumer_id))) rows.push_back(BillingRecord::decode(*v));
          if (r == q.to_round) break;
        }
        rw.output = encode_billing(rows);
        break;
      }
    }
  } catch (const Error& e) {
    rw.status = e.code();
    rw.writes.clear();
    rw.output.clear();
  }
  if (perturb && rw.status == Errc::Ok) rw.writes["perturbed"] = {1};
  return rw;
}

TransactionResult TeLedger::submit(const SignedProposal& p) {
  TransactionResult result;
  auto reject = [&](Errc e) {
    result.status = e;
    return result;
  };

  std::lock_guard lock(mu_);
  // Factor 1: membership.
  const auto& cert = p.client_certificate;
  if (!iur::certificate_signature_valid(cert, registry_.ca_public_key())) {
    return reject(Errc::MspRejected);
  }
  if (registry_.crl_check(cert.serial)) return reject(Errc::RevokedCertificate);
  auto cred = credentials_.find(cert.subject_id);
  if (cred == credentials_.end() || cred->second.certificate.serial != cert.serial) {
    return reject(Errc::MspRejected);
  }

  // Factor 2: chip signature over the exact message bytes.
  if (!crypto::verify(p.chip_public_key, p.signed_message, p.chip_signature)) {
    return reject(Errc::SecondFactorRejected);
  }

  std::string claimed;
  try {
    switch (p.function) {
      case Function::SubmitBid:
        claimed = Bid::decode(p.signed_message).prosumer_id;
        break;
      case Function::GetDispatch:
        claimed = DispatchRequest::decode(p.signed_message).prosumer_id;
        break;
      case Function::QueryBilling:
        claimed = BillingQuery::decode(p.signed_message).prosumer_id;
        break;
    }
  } catch (const Error&) {
    return reject(p.function == Function::SubmitBid ? Errc::MalformedBid : Errc::Malformed);
  }
  if (claimed != cert.subject_id) return reject(Errc::MspRejected);
  if (p.chip_public_key != cert.subject_public_key ||
      p.chip_public_key != cred->second.chip_public_key) {
    return reject(Errc::KeyBindingMismatch);
  }

  // Endorsement: two independent executions must agree.
  WorldState copy_a = state_;
  WorldState copy_b = state_;
  auto rw_a = execute(copy_a, p, false);
  auto rw_b = execute(copy_b, p, faulty_endorser_);
  if (!(rw_a == rw_b)) return reject(Errc::EndorsementMismatch);
  if (rw_a.status != Errc::Ok) return reject(rw_a.status);

  result.payload = rw_a.output;
  if (p.function == Function::QueryBilling) return result;

  for (auto& [k, v] : rw_a.writes) state_[k] = v;
  ByteWriter body;
  body.lp(p.encode()).u32(static_cast<std::uint32_t>(rw_a.writes.size()));
  for (const auto& [k, v] : rw_a.writes) body.lp(k).lp(v);
  append_block(static_cast<std::uint8_t>(BlockKind::Transaction), body.bytes());
  result.block_height = blocks_.size() - 1;
  return result;
}

ClearingResult TeLedger::clear_market(std::uint32_t round) {
  std::lock_guard lock(mu_);
  auto ck = clearing_key(round);
  if (auto it = state_.find(ck); it != state_.end()) return ClearingResult::decode(it->second);

  std::vector<Bid> book;
  auto prefix = "bid/" + round_key(round) + "/";
  for (auto it = state_.lower_bound(prefix); it != state_.end() && it->first.starts_with(prefix);
       ++it) {
    book.push_back(Bid::decode(it->second));
  }
  auto result = clear_bids(round, book, params_);

  ByteWriter body;
  body.lp(result.encode());
  state_[ck] = result.encode();
  for (const auto& [id, d] : result.dispatch) {
    BillingRecord b;
    b.prosumer_id = id;
    b.round = round;
    b.dispatched_w = d.real_power_w;
    b.energy_wh = d.real_power_w * kRoundHours;
    b.price = result.clearing_price;
    b.amount_nano = b.energy_wh * b.price;
    state_[billing_key(round, id)] = b.encode();
    body.lp(b.encode());
  }
  append_block(static_cast<std::uint8_t>(BlockKind::Clearing), body.bytes());
  return result;
}

std::optional<ClearingResult> TeLedger::clearing(std::uint32_t round) const {
  std::lock_guard lock(mu_);
  auto it = state_.find(clearing_key(round));
  if (it == state_.end()) return std::nullopt;
  return ClearingResult::decode(it->second);
}

DispatchSetpoint TeLedger::get_dispatch(const SignedProposal& proposal) {
  if (proposal.function != Function::GetDispatch) throw Error(Errc::Malformed, "not GetDispatch");
  auto r = submit(proposal);
  if (!r.accepted()) throw Error(r.status);
  return DispatchSetpoint::decode(r.payload);
}

std::vector<BillingRecord> TeLedger::billing_query(const std::string& prosumer_id,
                                                   std::uint32_t from_round,
                                                   std::uint32_t to_round) const {
  std::lock_guard lock(mu_);
  std::vector<BillingRecord> out;
  for (auto r = from_round; r <= to_round; ++r) {
    if (auto it = state_.find(billing_key(r, prosumer_id)); it != state_.end()) {
      out.push_back(BillingRecord::decode(it->second));
    }
    if (r == to_round) break;
  }
  return out;
}

std::vector<BillingRecord> TeLedger::round_billing(std::uint32_t round) const {
  std::lock_guard lock(mu_);
  std::vector<BillingRecord> out;
  auto prefix = "billing/" + round_key(round) + "/";
  for (auto it = state_.lower_bound(prefix); it != state_.end() && it->first.starts_with(prefix);
       ++it) {
    out.push_back(BillingRecord::decode(it->second));
  }
  return out;
}

std::vector<Bid> TeLedger::bids(std::uint32_t round) const {
  std::lock_guard lock(mu_);
  std::vector<Bid> out;
  auto prefix = "bid/" + round_key(round) + "/";
  for (auto it = state_.lower_bound(prefix); it != state_.end() && it->first.starts_with(prefix);
       ++it) {
    out.push_back(Bid::decode(it->second));
  }
  return out;
}

ChainVerdict TeLedger::chain_verify_detail() const {
  std::lock_guard lock(mu_);
  return blocks_.verify();
}

HashChain TeLedger::block_store() const {
  std::lock_guard lock(mu_);
  return blocks_;
}

Bytes TeLedger::world_state_bytes() const {
  std::lock_guard lock(mu_);
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(state_.size()));
  for (const auto& [k, v] : state_) w.lp(k).lp(v);
  return std::move(w).take();
}

}  // namespace gridtrust::te
