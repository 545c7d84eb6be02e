#include <gtest/gtest.h>

#include "gridtrust/error.hpp"
#include "gridtrust/esp.hpp"
#include "gridtrust/session.hpp"
#include "test_util.hpp"

using namespace gridtrust;
using namespace gridtrust::esp;

namespace {

struct Run {
  ProvisioningTrace trace;
  bool registrar_committed = false;
  chip::StatusResult status;
  crypto::SymmetricKey new_key;
  crypto::SymmetricKey old_key;
  bool answers_new = false;
  bool answers_old = false;
};

Run provision(const FaultPlan& plan, std::uint64_t seed = 1) {
  LogicalClock clock(10000);
  DeterministicRandom keys(seed, "keys");
  DeterministicRandom reg_rng(seed, "registrar");
  auto t = testutil::make_chip("dev", keys, clock, seed);
  RegistrarPlan rp;
  rp.session_id = 1;
  rp.device_id = "dev";
  rp.current_key = t.identity.supply_chain_secret;
  rp.new_key = crypto::SymmetricKey(keys.bytes(64));
  DeviceEndpoint device(*t.client);
  RegistrarEndpoint registrar(rp, reg_rng);

  Run r;
  r.trace = run_provisioning(device, registrar, *t.client, plan, clock);
  r.registrar_committed = registrar.result().committed;
  r.status = t.client->status();
  r.new_key = rp.new_key;
  r.old_key = rp.current_key;
  auto ch = to_bytes("probe");
  auto tag = t.client->challenge_respond(ch, clock.now(), 100);
  r.answers_new = tag == crypto::mac_compute(rp.new_key, "challenge", ch, clock.now());
  r.answers_old = tag == crypto::mac_compute(rp.current_key, "challenge", ch, clock.now());
  return r;
}

// Registrar belief and chip state agree, and the chip holds exactly the key
// that belief implies.
bool consistent(const Run& r) {
  if (r.status.lifecycle == chip::Lifecycle::SupersessionPending) return false;
  if (r.registrar_committed) return r.status.config_id == 1 && r.answers_new;
  return r.status.config_id == 0 && r.answers_old;
}

}  // namespace

TEST(Esp, CleanRunCommits) {
  auto r = provision({});
  EXPECT_TRUE(r.trace.committed());
  EXPECT_EQ(r.trace.error, Errc::Ok);
  EXPECT_EQ(r.status.lifecycle, chip::Lifecycle::ApplicationProvisioned);
  EXPECT_TRUE(consistent(r));
  EXPECT_EQ(r.trace.sent.size(), 5u);
}

TEST(Esp, FaultMatrixConsistentAndTerminating) {
  for (auto target : {WireMessage::Msg1, WireMessage::Msg2, WireMessage::Msg3a, WireMessage::Msg3b}) {
    for (auto kind : {FaultKind::Drop, FaultKind::Corrupt, FaultKind::Replay, FaultKind::Reorder}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        FaultPlan plan;
        plan.faults.push_back({target, kind});
        plan.seed = seed;
        auto r = provision(plan, seed);
        SCOPED_TRACE(std::string(to_string(target)) + " " + std::string(to_string(kind)));
        EXPECT_TRUE(consistent(r));
        EXPECT_EQ(r.trace.final_config_id, r.status.config_id);
        if (!r.registrar_committed) {
          EXPECT_NE(r.trace.error, Errc::Ok);
          EXPECT_TRUE(r.trace.failed_at.has_value());
        }
      }
    }
  }
}

TEST(Esp, DropMsg2TimesOutAndDeviceStaysFactory) {
  FaultPlan plan;
  plan.faults.push_back({WireMessage::Msg2, FaultKind::Drop});
  auto r = provision(plan);
  EXPECT_FALSE(r.registrar_committed);
  EXPECT_EQ(r.trace.error, Errc::Timeout);
  ASSERT_TRUE(r.trace.failed_at);
  EXPECT_EQ(segment_name(*r.trace.failed_at), "2");
  EXPECT_EQ(r.status.lifecycle, chip::Lifecycle::SupplyChainProvisioned);
}

TEST(Esp, CorruptMsg2IsChallengeFailure) {
  FaultPlan plan;
  plan.faults.push_back({WireMessage::Msg2, FaultKind::Corrupt});
  auto r = provision(plan);
  EXPECT_FALSE(r.registrar_committed);
  EXPECT_EQ(r.trace.error, Errc::ChallengeFailure);
  EXPECT_TRUE(consistent(r));
}

TEST(Esp, CorruptMsg3bRollsBack) {
  FaultPlan plan;
  plan.faults.push_back({WireMessage::Msg3b, FaultKind::Corrupt});
  auto r = provision(plan);
  EXPECT_FALSE(r.registrar_committed);
  EXPECT_EQ(r.trace.error, Errc::SupersessionFailure);
  EXPECT_EQ(r.status.config_id, 0u);
  EXPECT_TRUE(consistent(r));
}

TEST(Esp, StaleReplayFromEarlierSessionRejected) {
  auto first = provision({}, 4);
  for (auto target : {WireMessage::Msg1, WireMessage::Msg2, WireMessage::Msg3a, WireMessage::Msg3b}) {
    FaultPlan plan;
    plan.faults.push_back({target, FaultKind::Replay});
    plan.stale = first.trace.sent;
    auto r = provision(plan, 5);
    SCOPED_TRACE(std::string(to_string(target)));
    EXPECT_FALSE(r.registrar_committed);
    EXPECT_TRUE(consistent(r));
  }
}

TEST(Esp, NamesParse) {
  EXPECT_EQ(wire_message_from_string("3a"), WireMessage::Msg3a);
  EXPECT_EQ(wire_message_from_string("msg2"), WireMessage::Msg2);
  EXPECT_EQ(fault_kind_from_string("reorder"), FaultKind::Reorder);
  EXPECT_EQ(segment_name(WireMessage::Hello), "1");
  EXPECT_THROW(fault_kind_from_string("nope"), Error);
}

TEST(Esp, MessageEncodingRoundTrip) {
  ProvisionMessage m{42, Msg2{crypto::SealedPacket{crypto::Nonce{1}, Bytes{1, 2}, {}}}};
  auto back = ProvisionMessage::decode(m.encode());
  EXPECT_EQ(back.session_id, 42u);
  EXPECT_EQ(back.kind(), WireMessage::Msg2);
  EXPECT_EQ(back.encode(), m.encode());
}

namespace {

struct Pair {
  LogicalClock clock;
  DeterministicRandom keys{8, "keys"};
  testutil::TestChip a = testutil::make_chip("a", keys, clock, 1);
  testutil::TestChip b = testutil::make_chip("b", keys, clock, 2);

  void provision_both(bool same_key) {
    DeterministicRandom rr(3);
    auto k = crypto::SymmetricKey(keys.bytes(64));
    for (auto* t : {&a, &b}) {
      RegistrarPlan rp{1, t->identity.device_id, t->identity.supply_chain_secret, 0,
                       same_key || t == &a ? k : crypto::SymmetricKey(keys.bytes(64))};
      DeviceEndpoint d(*t->client);
      RegistrarEndpoint r(rp, rr);
      ASSERT_TRUE(run_provisioning(d, r, *t->client, {}, clock).committed());
    }
  }
};

}  // namespace

TEST(Session, SendRecvAndReplay) {
  Pair p;
  p.provision_both(true);
  DeterministicRandom rng(4);
  auto s = session_establish(*p.a.client, *p.b.client, rng);
  auto f1 = s.initiator.send(to_bytes("one"));
  auto f2 = s.initiator.send(to_bytes("two"));
  EXPECT_EQ(s.responder.recv(f1), to_bytes("one"));
  EXPECT_EQ(s.responder.recv(f2), to_bytes("two"));
  try {
    s.responder.recv(f1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ReplayDetected);
  }
  auto back = s.responder.send(to_bytes("ack"));
  EXPECT_EQ(s.initiator.recv(back), to_bytes("ack"));
}

TEST(Session, GapAndTamper) {
  Pair p;
  p.provision_both(true);
  DeterministicRandom rng(4);
  auto s = session_establish(*p.a.client, *p.b.client, rng);
  auto f1 = s.initiator.send(to_bytes("one"));
  auto f2 = s.initiator.send(to_bytes("two"));
  try {
    s.responder.recv(f2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SequenceGap);
  }
  f1.back() ^= 1;
  try {
    s.responder.recv(f1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::AuthenticationFailure);
  }
}

TEST(Session, UnprovisionedOrMismatchedRejected) {
  {
    Pair p;
    DeterministicRandom rng(4);
    try {
      session_establish(*p.a.client, *p.b.client, rng);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::NotProvisioned);
    }
  }
  {
    Pair p;
    p.provision_both(false);
    DeterministicRandom rng(4);
    try {
      session_establish(*p.a.client, *p.b.client, rng);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::AuthenticationFailure);
    }
  }
}
