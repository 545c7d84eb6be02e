#include "gridtrust/esp_crypto.hpp"

namespace gridtrust::esp {

Bytes msg1_body(const Nonce& server_nonce, const Nonce& device_nonce,
                const PublicKey& device_public_key, const MacTag& mutual_mac) {
  return concat({server_nonce, device_nonce, device_public_key, mutual_mac.bytes});
}

MacTag mutual_mac(const SymmetricKey& active_key, const Nonce& server_nonce,
                  const Nonce& device_nonce, const PublicKey& device_public_key) {
  return crypto::mac_compute(active_key, "esp-msg1",
                             concat({server_nonce, device_nonce, device_public_key}), 0);
}

SymmetricKey session_key(const SymmetricKey& active_key, const Nonce& server_nonce,
                         const Nonce& device_nonce) {
  return crypto::kdf_derive(active_key.secret_bytes(), "esp-session", server_nonce, device_nonce);
}

Digest transcript_digest(ByteView msg1, ByteView msg2) { return crypto::sha3_512({msg1, msg2}); }

Bytes KeyPacket::encode() const {
  ByteWriter w;
  w.raw(key.secret_bytes()).u32(config_id).lp(device_id);
  return std::move(w).take();
}

KeyPacket KeyPacket::decode(ByteView data) {
  ByteReader r(data);
  KeyPacket p;
  p.key = SymmetricKey(r.fixed<crypto::kSymmetricKeySize>());
  p.config_id = r.u32();
  p.device_id = r.lp_string();
  r.expect_done();
  return p;
}

MacTag install_ack(const SymmetricKey& new_key, const Digest& transcript) {
  return crypto::mac_compute(new_key, "esp-install-ack", transcript, 0);
}

ProofPair supersession_proof(const SymmetricKey& old_key, const SymmetricKey& new_key,
                             const Digest& transcript) {
  ProofPair p;
  p.old_tag = crypto::mac_compute(old_key, "esp-supersession-old", transcript, 0);
  p.new_tag =
      crypto::mac_compute(new_key, "esp-supersession-new", concat({transcript, p.old_tag.bytes}), 0);
  return p;
}

Bytes CommitStream::encode() const {
  ByteWriter w;
  w.raw(transcript).u32(config_id).raw(old_key_tag.bytes);
  return std::move(w).take();
}

CommitStream CommitStream::decode(ByteView data) {
  ByteReader r(data);
  CommitStream c;
  c.transcript = r.fixed<crypto::kDigestSize>();
  c.config_id = r.u32();
  c.old_key_tag.bytes = r.fixed<crypto::kMacTagSize>();
  r.expect_done();
  return c;
}

MacTag commit_old_key_tag(const SymmetricKey& old_key, const Digest& transcript,
                          const ProofPair& proof, std::uint32_t config_id) {
  ByteWriter w;
  w.raw(transcript).raw(proof.old_tag.bytes).raw(proof.new_tag.bytes).u32(config_id);
  return crypto::mac_compute(old_key, "esp-commit-old", w.bytes(), 0);
}

}  // namespace gridtrust::esp
