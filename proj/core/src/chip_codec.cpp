// Canonical chip command/response encoding. Opcodes are the variant indices
// of CommandBody and ResponseBody; the order of those variants is frozen.

#include "gridtrust/chip.hpp"
#include "gridtrust/framing.hpp"

namespace gridtrust::chip {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void write_tag(ByteWriter& w, const MacTag& t) { w.raw(t.bytes); }
MacTag read_tag(ByteReader& r) { return MacTag{r.fixed<crypto::kMacTagSize>()}; }

template <std::size_t I = 0>
CommandBody default_command(std::size_t index) {
  if constexpr (I < std::variant_size_v<CommandBody>) {
    if (index == I) return CommandBody{std::in_place_index<I>};
    return default_command<I + 1>(index);
  } else {
    throw Error(Errc::UnknownCommand);
  }
}

template <std::size_t I = 0>
ResponseBody default_response(std::size_t index) {
  if constexpr (I < std::variant_size_v<ResponseBody>) {
    if (index == I) return ResponseBody{std::in_place_index<I>};
    return default_response<I + 1>(index);
  } else {
    throw Error(Errc::Malformed, "unknown response type");
  }
}

}  // namespace

Bytes encode(const ChipCommand& cmd) {
  ByteWriter w;
  std::visit(Overloaded{
                 [](const GetPublicKey&) {},
                 [](const GetStatus&) {},
                 [&](const SignMessage& c) { w.lp(c.message); },
                 [&](const MacNext& c) { w.lp(c.context).lp(c.message); },
                 [&](const MacCheck& c) {
                   w.lp(c.context).lp(c.message).u64(c.counter);
                   write_tag(w, c.tag);
                   w.u64(c.window);
                 },
                 [&](const ChallengeRespond& c) {
                   w.lp(c.challenge).u64(c.issued_at).u32(c.deadline_ms);
                 },
                 [&](const ProvisionBegin& c) { w.raw(c.server_nonce); },
                 [&](const ProvisionInstall& c) { c.packet.write(w); },
                 [](const SupersessionProof&) {},
                 [&](const ProvisionCommit& c) { c.commit_stream.write(w); },
                 [](const ProvisionAbort&) {},
                 [&](const DeriveSessionKey& c) { w.lp(c.label).lp(c.nonce_a).lp(c.nonce_b); },
             },
             cmd.body);
  return framing::encode(framing::Request{static_cast<std::uint8_t>(cmd.body.index()),
                                          cmd.correlation_id, std::move(w).take()});
}

ChipCommand decode_command(ByteView frame) {
  auto req = framing::decode_request(frame);
  ChipCommand cmd{req.correlation_id, default_command(req.opcode)};
  ByteReader r(req.body);
  std::visit(Overloaded{
                 [](GetPublicKey&) {},
                 [](GetStatus&) {},
                 [&](SignMessage& c) { c.message = r.lp(); },
                 [&](MacNext& c) {
                   c.context = r.lp_string();
                   c.message = r.lp();
                 },
                 [&](MacCheck& c) {
                   c.context = r.lp_string();
                   c.message = r.lp();
                   c.counter = r.u64();
                   c.tag = read_tag(r);
                   c.window = r.u64();
                 },
                 [&](ChallengeRespond& c) {
                   c.challenge = r.lp();
                   c.issued_at = r.u64();
                   c.deadline_ms = r.u32();
                 },
                 [&](ProvisionBegin& c) { c.server_nonce = r.fixed<crypto::kNonceSize>(); },
                 [&](ProvisionInstall& c) { c.packet = SealedPacket::read(r); },
                 [](SupersessionProof&) {},
                 [&](ProvisionCommit& c) { c.commit_stream = SealedPacket::read(r); },
                 [](ProvisionAbort&) {},
                 [&](DeriveSessionKey& c) {
                   c.label = r.lp_string();
                   c.nonce_a = r.lp();
                   c.nonce_b = r.lp();
                 },
             },
             cmd.body);
  r.expect_done();
  return cmd;
}

Bytes encode(const ChipResponse& resp) {
  ByteWriter w;
  std::visit(Overloaded{
                 [](const std::monostate&) {},
                 [&](const PublicKeyResult& v) { w.raw(v.public_key); },
                 [&](const StatusResult& v) {
                   w.lp(v.device_id)
                       .u8(static_cast<std::uint8_t>(v.lifecycle))
                       .u32(v.config_id)
                       .u64(v.mac_counter);
                 },
                 [&](const SignatureResult& v) { w.raw(v.signature.bytes); },
                 [&](const MacResult& v) {
                   w.u64(v.counter);
                   write_tag(w, v.tag);
                 },
                 [&](const CheckResult& v) { w.u8(v.accepted ? 1 : 0); },
                 [&](const TagResult& v) { write_tag(w, v.tag); },
                 [&](const BeginResult& v) {
                   w.raw(v.device_nonce).raw(v.public_key);
                   write_tag(w, v.tag);
                 },
                 [&](const ProofResult& v) {
                   write_tag(w, v.proof.old_tag);
                   write_tag(w, v.proof.new_tag);
                 },
                 [&](const CommitResult& v) {
                   w.u8(static_cast<std::uint8_t>(v.lifecycle)).u32(v.config_id);
                 },
                 [&](const SessionKeyResult& v) { w.raw(v.session_key.secret_bytes()); },
             },
             resp.body);
  return framing::encode(framing::Response{static_cast<std::uint8_t>(resp.body.index()),
                                           resp.correlation_id, resp.status, std::move(w).take()});
}

ChipResponse decode_response(ByteView frame) {
  auto raw = framing::decode_response(frame);
  ChipResponse resp{raw.correlation_id, raw.status, default_response(raw.opcode)};
  ByteReader r(raw.body);
  auto lifecycle = [&] {
    auto v = r.u8();
    if (v > 2) throw Error(Errc::Malformed, "bad lifecycle");
    return static_cast<Lifecycle>(v);
  };
  std::visit(Overloaded{
                 [](std::monostate&) {},
                 [&](PublicKeyResult& v) { v.public_key = r.fixed<crypto::kPublicKeySize>(); },
                 [&](StatusResult& v) {
                   v.device_id = r.lp_string();
                   v.lifecycle = lifecycle();
                   v.config_id = r.u32();
                   v.mac_counter = r.u64();
                 },
                 [&](SignatureResult& v) {
                   v.signature.bytes = r.fixed<crypto::kSignatureSize>();
                 },
                 [&](MacResult& v) {
                   v.counter = r.u64();
                   v.tag = read_tag(r);
                 },
                 [&](CheckResult& v) { v.accepted = r.u8() != 0; },
                 [&](TagResult& v) { v.tag = read_tag(r); },
                 [&](BeginResult& v) {
                   v.device_nonce = r.fixed<crypto::kNonceSize>();
                   v.public_key = r.fixed<crypto::kPublicKeySize>();
                   v.tag = read_tag(r);
                 },
                 [&](ProofResult& v) {
                   v.proof.old_tag = read_tag(r);
                   v.proof.new_tag = read_tag(r);
                 },
                 [&](CommitResult& v) {
                   v.lifecycle = lifecycle();
                   v.config_id = r.u32();
                 },
                 [&](SessionKeyResult& v) {
                   v.session_key = SymmetricKey(r.fixed<crypto::kSymmetricKeySize>());
                 },
             },
             resp.body);
  r.expect_done();
  return resp;
}

}  // namespace gridtrust::chip
