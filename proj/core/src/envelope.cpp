#include "gridtrust/envelope.hpp"

#include "json.hpp"

namespace gridtrust::envelope {

using json = nlohmann::json;

std::string_view to_string(EnvelopeType t) {
  switch (t) {
    case EnvelopeType::Query:
      return "Query";
    case EnvelopeType::Dispatch:
      return "Dispatch";
    case EnvelopeType::Response:
      return "Response";
    case EnvelopeType::Error:
      return "Error";
  }
  return "?";
}

EnvelopeType envelope_type_from_string(std::string_view s) {
  for (auto t : {EnvelopeType::Query, EnvelopeType::Dispatch, EnvelopeType::Response,
                 EnvelopeType::Error}) {
    if (s == to_string(t)) return t;
  }
  throw Error(Errc::UnknownType, std::string(s));
}

Bytes canonical_payload(const Payload& p) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(p.size()));
  for (const auto& [k, v] : p) {
    w.lp(k);
    if (auto* i = std::get_if<std::int64_t>(&v)) {
      w.u8(0).i64(*i);
    } else {
      w.u8(1).lp(std::get<std::string>(v));
    }
  }
  return std::move(w).take();
}

Payload decode_payload(ByteView data) {
  ByteReader r(data);
  Payload p;
  auto n = r.u32();
  std::string prev;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto key = r.lp_string();
    if (i > 0 && key <= prev) throw Error(Errc::Malformed, "payload keys not sorted");
    prev = key;
    auto tag = r.u8();
    if (tag == 0) {
      p[key] = r.i64();
    } else if (tag == 1) {
      p[key] = r.lp_string();
    } else {
      throw Error(Errc::Malformed, "payload value tag");
    }
  }
  r.expect_done();
  return p;
}

std::optional<std::int64_t> get_int(const Payload& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  if (auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
  return std::nullopt;
}

std::optional<std::string> get_string(const Payload& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) return std::nullopt;
  if (auto* v = std::get_if<std::string>(&it->second)) return *v;
  return std::nullopt;
}

Bytes MacEnvelope::mac_message() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(type)).lp(sender_id).raw(canonical_payload(message));
  return std::move(w).take();
}

std::string MacEnvelope::to_json() const {
  json msg = json::object();
  for (const auto& [k, v] : message) {
    std::visit([&](const auto& x) { msg[k] = x; }, v);
  }
  json j = {{"type", to_string(type)},
            {"message", msg},
            {"counter", counter},
            {"otp", to_hex(otp.bytes)},
            {"sender_id", sender_id}};
  return j.dump();
}

MacEnvelope MacEnvelope::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::Malformed, e.what());
  }
  try {
    MacEnvelope e;
    e.type = envelope_type_from_string(j.at("type").get<std::string>());
    for (const auto& [k, v] : j.at("message").items()) {
      if (v.is_number_integer()) {
        e.message[k] = v.get<std::int64_t>();
      } else if (v.is_string()) {
        e.message[k] = v.get<std::string>();
      } else {
        throw Error(Errc::Malformed, "message value for " + k);
      }
    }
    e.counter = j.at("counter").get<std::uint64_t>();
    e.otp.bytes = to_array<crypto::kMacTagSize>(from_hex(j.at("otp").get<std::string>()));
    e.sender_id = j.at("sender_id").get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw Error(Errc::Malformed, ex.what());
  }
}

Bytes MacEnvelope::encode() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(type))
      .lp(sender_id)
      .lp(canonical_payload(message))
      .u64(counter)
      .raw(otp.bytes);
  return std::move(w).take();
}

MacEnvelope MacEnvelope::decode(ByteView data) {
  ByteReader r(data);
  MacEnvelope e;
  auto t = r.u8();
  if (t > 3) throw Error(Errc::UnknownType, std::to_string(t));
  e.type = static_cast<EnvelopeType>(t);
  e.sender_id = r.lp_string();
  e.message = decode_payload(r.lp());
  e.counter = r.u64();
  e.otp.bytes = r.fixed<crypto::kMacTagSize>();
  r.expect_done();
  return e;
}

MacEnvelope seal(chip::ChipClient& chip, std::string_view context, EnvelopeType type,
                 Payload message, std::string sender_id) {
  MacEnvelope e;
  e.type = type;
  e.message = std::move(message);
  e.sender_id = std::move(sender_id);
  auto m = chip.mac_next(context, e.mac_message());
  e.counter = m.counter;
  e.otp = m.tag;
  return e;
}

}  // namespace gridtrust::envelope
