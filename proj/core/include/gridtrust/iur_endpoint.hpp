#pragma once

#include "gridtrust/framing.hpp"
#include "gridtrust/iur.hpp"

namespace gridtrust::iur {

// Registrar operations over the shared length-prefixed framing. Device
// registration is a manufacturing step and provisioning needs a chip channel,
// so neither is exposed here.
enum class IurOp : std::uint8_t {
  IssueCertificate = 1,   // lp subject || pubkey[32]            -> certificate
  RevokeCertificate = 2,  // u64 serial                          -> (empty)
  CrlCheck = 3,           // u64 serial                          -> u8 revoked
  AuthorizeUpdate = 4,    // lp device || digest[64]             -> code[32]
  ConsumeUpdateCode = 5,  // lp device || digest[64] || code[32] -> u8 accepted
  LedgerVerify = 6,       // (empty)                             -> u8 intact || u64 bad_index
  PooVerify = 7,          // lp data || sig[64] || lp device     -> u8 valid
  CrlExport = 8,          // (empty)                             -> u32 n || n * u64
};

class IurEndpoint {
 public:
  explicit IurEndpoint(IurService& service) : service_(service) {}

  Bytes handle(ByteView request_frame);

 private:
  IurService& service_;
};

}  // namespace gridtrust::iur
