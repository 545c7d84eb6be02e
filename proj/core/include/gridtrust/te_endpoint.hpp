#pragma once

#include <iosfwd>

#include "gridtrust/framing.hpp"
#include "gridtrust/te_ledger.hpp"

namespace gridtrust::te {

enum class TeOp : std::uint8_t {
  Submit = 1,        // proposal                     -> u8 has_height || u64 height || lp payload
  ClearMarket = 2,   // u32 round                    -> clearing result
  BillingQuery = 3,  // lp prosumer || u32 || u32    -> billing rows
  ChainVerify = 4,   // (empty)                      -> u8 intact || u64 bad_index
  Enroll = 5,        // lp prosumer || pubkey[32]    -> certificate
};

class TeEndpoint {
 public:
  explicit TeEndpoint(TeLedger& ledger) : ledger_(ledger) {}

  Bytes handle(ByteView request_frame);

 private:
  TeLedger& ledger_;
};

// Batch driver. Each input line is either a hex-encoded SignedProposal or
// "clear <round>"; blank lines and '#' comments are skipped. Writes one
// result line per command and returns the number of rejected proposals.
std::size_t run_script(TeLedger& ledger, std::istream& in, std::ostream& out);

}  // namespace gridtrust::te
