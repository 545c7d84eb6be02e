#include "gridtrust/iur_endpoint.hpp"

#include <limits>

namespace gridtrust::iur {

Bytes IurEndpoint::handle(ByteView request_frame) {
  framing::Response resp;
  try {
    auto req = framing::decode_request(request_frame);
    resp.opcode = req.opcode;
    resp.correlation_id = req.correlation_id;
    ByteReader r(req.body);
    ByteWriter out;
    switch (static_cast<IurOp>(req.opcode)) {
      case IurOp::IssueCertificate: {
        auto subject = r.lp_string();
        auto key = r.fixed<crypto::kPublicKeySize>();
        r.expect_done();
        service_.issue_certificate(subject, key).write(out);
        break;
      }
      case IurOp::RevokeCertificate: {
        auto serial = r.u64();
        r.expect_done();
        service_.revoke_certificate(serial);
        break;
      }
      case IurOp::CrlCheck: {
        auto serial = r.u64();
        r.expect_done();
        out.u8(service_.crl_check(serial) ? 1 : 0);
        break;
      }
      case IurOp::AuthorizeUpdate: {
        auto device = r.lp_string();
        auto digest = r.fixed<crypto::kDigestSize>();
        r.expect_done();
        out.raw(service_.authorize_update(device, digest).single_use_code);
        break;
      }
      case IurOp::ConsumeUpdateCode: {
        auto device = r.lp_string();
        auto digest = r.fixed<crypto::kDigestSize>();
        auto code = r.fixed<32>();
        r.expect_done();
        out.u8(service_.consume_update_code(device, digest, code) ? 1 : 0);
        break;
      }
      case IurOp::LedgerVerify: {
        r.expect_done();
        auto v = service_.ledger_verify();
        out.u8(v.intact ? 1 : 0)
            .u64(v.first_bad_index ? *v.first_bad_index : std::numeric_limits<std::uint64_t>::max());
        break;
      }
      case IurOp::PooVerify: {
        auto data = r.lp();
        Signature sig{r.fixed<crypto::kSignatureSize>()};
        auto device = r.lp_string();
        r.expect_done();
        out.u8(service_.poo_verify(data, sig, device) ? 1 : 0);
        break;
      }
      case IurOp::CrlExport: {
        r.expect_done();
        auto crl = service_.crl();
        out.u32(static_cast<std::uint32_t>(crl.size()));
        for (auto s : crl) out.u64(s);
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

}  // namespace gridtrust::iur
