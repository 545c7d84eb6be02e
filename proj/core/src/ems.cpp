#include "gridtrust/ems.hpp"

namespace gridtrust::ems {

using envelope::EnvelopeType;
using envelope::MacEnvelope;

Ems::Ems(ProsumerConfig config, chip::ChipClient& chip, te::TeLedger& ledger, DeviceLink link)
    : config_(std::move(config)), chip_(chip), ledger_(ledger), link_(std::move(link)) {
  if (config_.rated_w == 0) throw Error(Errc::Malformed, "rated watts must be positive");
}

iur::Certificate Ems::enroll() {
  certificate_ = ledger_.enroll_client(config_.prosumer_id, chip_.public_key());
  return *certificate_;
}

te::SignedProposal Ems::make_proposal(te::Function function, Bytes message) {
  te::SignedProposal p;
  if (certificate_) p.client_certificate = *certificate_;
  p.function = function;
  p.chip_signature = chip_.sign(message);
  p.chip_public_key = chip_.public_key();
  p.signed_message = std::move(message);
  return p;
}

te::TransactionResult Ems::submit_bid(te::BidKind kind, te::AssetType asset, te::Watts quantity_w,
                                      te::MicroPrice price, std::uint32_t round) {
  te::Bid bid{config_.prosumer_id, kind, asset, quantity_w, price, round};
  bid.validate();
  return ledger_.submit(make_proposal(te::Function::SubmitBid, bid.encode()));
}

te::DispatchSetpoint Ems::fetch_dispatch(std::uint32_t round) {
  te::DispatchRequest req{config_.prosumer_id, round, next_nonce_++};
  return ledger_.get_dispatch(make_proposal(te::Function::GetDispatch, req.encode()));
}

std::vector<te::BillingRecord> Ems::query_billing(std::uint32_t from_round,
                                                  std::uint32_t to_round) {
  te::BillingQuery q{config_.prosumer_id, from_round, to_round, next_nonce_++};
  auto r = ledger_.submit(make_proposal(te::Function::QueryBilling, q.encode()));
  if (!r.accepted()) throw Error(r.status);
  return te::decode_billing(r.payload);
}

DeviceReply Ems::exchange(EnvelopeType type, envelope::Payload message) {
  auto env = envelope::seal(chip_, envelope::kEmsToDevice, type, std::move(message),
                            config_.prosumer_id);
  last_sent_ = env.counter;
  auto text = link_ ? link_(env.to_json()) : std::nullopt;
  if (!text) throw Error(Errc::Timeout, "no reply from device agent");

  MacEnvelope resp;
  try {
    resp = MacEnvelope::from_json(*text);
  } catch (const Error&) {
    throw Error(Errc::ResponseOtpInvalid, "unparseable reply");
  }
  bool authentic = false;
  try {
    authentic = chip_.mac_check(envelope::kDeviceToEms, resp.mac_message(), resp.counter,
                                resp.otp);
  } catch (const Error&) {
    authentic = false;
  }
  if (!authentic) throw Error(Errc::ResponseOtpInvalid);
  if (resp.type == EnvelopeType::Error) {
    throw Error(Errc::OtpRejectedByDevice,
                envelope::get_string(resp.message, "reason").value_or("unknown"));
  }
  auto in_reply_to = envelope::get_int(resp.message, "in_reply_to");
  if (resp.type != EnvelopeType::Response || !in_reply_to ||
      static_cast<std::uint64_t>(*in_reply_to) != env.counter) {
    throw Error(Errc::ResponseOtpInvalid, "reply does not answer this request");
  }

  DeviceReply out;
  out.output_w = envelope::get_int(resp.message, "output_w").value_or(0);
  out.counter = resp.counter;
  out.message = std::move(resp.message);
  return out;
}

DeviceReply Ems::dispatch_to_device(const te::DispatchSetpoint& setpoint) {
  return exchange(EnvelopeType::Dispatch, {{"real_power_w", setpoint.real_power_w}});
}

DeviceReply Ems::query_device(const std::string& kind) {
  return exchange(EnvelopeType::Query, {{"kind", kind}});
}

}  // namespace gridtrust::ems
