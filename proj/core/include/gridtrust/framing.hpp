#pragma once

// Length-prefixed binary framing shared by the chip, registrar and ledger
// endpoints:
//
//   frame    := u32 length || payload
//   request  := u8 opcode || u32 correlation_id || body
//   response := u8 opcode || u32 correlation_id || u16 status || body
//
// All integers are big-endian.

#include <cstdint>
#include <optional>

#include "gridtrust/bytes.hpp"
#include "gridtrust/error.hpp"

namespace gridtrust::framing {

Bytes frame(ByteView payload);
// Throws Malformed unless `data` is exactly one frame.
Bytes unframe(ByteView data);

struct Request {
  std::uint8_t opcode = 0;
  std::uint32_t correlation_id = 0;
  Bytes body;
};

struct Response {
  std::uint8_t opcode = 0;
  std::uint32_t correlation_id = 0;
  Errc status = Errc::Ok;
  Bytes body;
};

Bytes encode(const Request& req);
Bytes encode(const Response& resp);
Request decode_request(ByteView frame_bytes);
Response decode_response(ByteView frame_bytes);

// Accumulates bytes from a stream and yields complete frames.
class FrameAssembler {
 public:
  void feed(ByteView data);
  std::optional<Bytes> next();

 private:
  Bytes buffer_;
};

}  // namespace gridtrust::framing
