#pragma once

// Host-side replay of the registrar's constructions, so chip tests can walk
// the provisioning commands one at a time.

#include "gridtrust/chip.hpp"
#include "gridtrust/esp_crypto.hpp"

namespace testutil {

struct ManualRegistrar {
  gridtrust::crypto::SymmetricKey old_key;
  gridtrust::crypto::SymmetricKey new_key;
  std::uint32_t new_config = 1;
  std::string device_id;

  gridtrust::crypto::Nonce server_nonce{};
  std::optional<gridtrust::chip::BeginResult> begin;
  std::optional<gridtrust::crypto::SealedPacket> packet;

  gridtrust::chip::BeginResult do_begin(gridtrust::chip::ChipClient& c) {
    server_nonce[0]++;
    begin = c.provision_begin(server_nonce);
    packet.reset();
    return *begin;
  }

  gridtrust::crypto::SealedPacket key_packet() {
    using namespace gridtrust;
    auto skey = esp::session_key(old_key, server_nonce, begin->device_nonce);
    esp::KeyPacket kp{new_key, new_config, device_id};
    crypto::Nonce n{};
    n[1] = server_nonce[0];
    packet = crypto::aead_seal(skey, n, kp.encode());
    return *packet;
  }

  gridtrust::esp::Digest transcript() const {
    using namespace gridtrust;
    auto m1 = esp::msg1_body(server_nonce, begin->device_nonce, begin->public_key, begin->tag);
    return esp::transcript_digest(m1, packet->encode());
  }

  gridtrust::crypto::SealedPacket commit_stream() const {
    using namespace gridtrust;
    auto t = transcript();
    auto proof = esp::supersession_proof(old_key, new_key, t);
    esp::CommitStream cs{t, new_config, esp::commit_old_key_tag(old_key, t, proof, new_config)};
    crypto::Nonce n{};
    n[2] = 1;
    return crypto::aead_seal(new_key, n, cs.encode());
  }

  // Runs begin, install and commit in one go.
  gridtrust::chip::CommitResult full(gridtrust::chip::ChipClient& c) {
    do_begin(c);
    c.provision_install(key_packet());
    return c.provision_commit(commit_stream());
  }
};

}  // namespace testutil
