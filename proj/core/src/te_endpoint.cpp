#include "gridtrust/te_endpoint.hpp"

#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace gridtrust::te {

Bytes TeEndpoint::handle(ByteView request_frame) {
  framing::Response resp;
  try {
    auto req = framing::decode_request(request_frame);
    resp.opcode = req.opcode;
    resp.correlation_id = req.correlation_id;
    ByteReader r(req.body);
    ByteWriter out;
    switch (static_cast<TeOp>(req.opcode)) {
      case TeOp::Submit: {
        auto result = ledger_.submit(SignedProposal::decode(req.body));
        if (!result.accepted()) throw Error(result.status);
        out.u8(result.block_height ? 1 : 0)
            .u64(result.block_height.value_or(0))
            .lp(result.payload);
        break;
      }
      case TeOp::ClearMarket: {
        auto round = r.u32();
        r.expect_done();
        out.raw(ledger_.clear_market(round).encode());
        break;
      }
      case TeOp::BillingQuery: {
        auto prosumer = r.lp_string();
        auto from = r.u32();
        auto to = r.u32();
        r.expect_done();
        out.raw(encode_billing(ledger_.billing_query(prosumer, from, to)));
        break;
      }
      case TeOp::ChainVerify: {
        r.expect_done();
        auto v = ledger_.chain_verify_detail();
        out.u8(v.intact ? 1 : 0)
            .u64(v.first_bad_index ? *v.first_bad_index : std::numeric_limits<std::uint64_t>::max());
        break;
      }
      case TeOp::Enroll: {
        auto prosumer = r.lp_string();
        auto key = r.fixed<crypto::kPublicKeySize>();
        r.expect_done();
        ledger_.enroll_client(prosumer, key).write(out);
        break;
      }
      default:
        throw Error(Errc::UnknownCommand);
    }
    resp.body = std::move(out).take();
  } catch (const Error& e) {
    resp.status = e.code();
    resp.body.clear();
  }
  return framing::encode(resp);
}

std::size_t run_script(TeLedger& ledger, std::istream& in, std::ostream& out) {
  std::size_t rejected = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream words(line);
    std::string head;
    words >> head;
    if (head == "clear") {
      std::uint32_t round = 0;
      words >> round;
      try {
        auto c = ledger.clear_market(round);
        out << "clear " << round << " price " << format_price(c.clearing_price) << " iterations "
            << c.iterations_used << (c.converged ? " converged" : " no-cross") << "\n";
      } catch (const Error& e) {
        out << "clear " << round << " " << to_string(e.code()) << "\n";
      }
      continue;
    }
    TransactionResult result;
    try {
      result = ledger.submit(SignedProposal::decode(from_hex(head)));
    } catch (const Error& e) {
      result.status = e.code();
    }
    if (!result.accepted()) ++rejected;
    out << "submit " << to_string(result.status);
    if (result.block_height) out << " block " << *result.block_height;
    out << "\n";
  }
  return rejected;
}

}  // namespace gridtrust::te
