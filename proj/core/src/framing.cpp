#include "gridtrust/framing.hpp"

namespace gridtrust::framing {

Bytes frame(ByteView payload) {
  ByteWriter w;
  w.lp(payload);
  return std::move(w).take();
}

Bytes unframe(ByteView data) {
  ByteReader r(data);
  auto payload = r.lp();
  r.expect_done();
  return payload;
}

Bytes encode(const Request& req) {
  ByteWriter w;
  w.u8(req.opcode).u32(req.correlation_id).raw(req.body);
  return frame(w.bytes());
}

Bytes encode(const Response& resp) {
  ByteWriter w;
  w.u8(resp.opcode).u32(resp.correlation_id).u16(static_cast<std::uint16_t>(resp.status)).raw(resp.body);
  return frame(w.bytes());
}

Request decode_request(ByteView frame_bytes) {
  auto payload = unframe(frame_bytes);
  ByteReader r(payload);
  Request req;
  req.opcode = r.u8();
  req.correlation_id = r.u32();
  req.body = r.raw(r.remaining());
  return req;
}

Response decode_response(ByteView frame_bytes) {
  auto payload = unframe(frame_bytes);
  ByteReader r(payload);
  Response resp;
  resp.opcode = r.u8();
  resp.correlation_id = r.u32();
  resp.status = static_cast<Errc>(r.u16());
  resp.body = r.raw(r.remaining());
  return resp;
}

void FrameAssembler::feed(ByteView data) { buffer_.insert(buffer_.end(), data.begin(), data.end()); }

std::optional<Bytes> FrameAssembler::next() {
  if (buffer_.size() < 4) return std::nullopt;
  std::uint32_t len = (std::uint32_t{buffer_[0]} << 24) | (std::uint32_t{buffer_[1]} << 16) |
                      (std::uint32_t{buffer_[2]} << 8) | buffer_[3];
  if (buffer_.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  Bytes out(buffer_.begin(), buffer_.begin() + 4 + len);
  buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + len);
  return out;
}

}  // namespace gridtrust::framing
