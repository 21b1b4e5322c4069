#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "fieldguard/devices.hpp"

using namespace fieldguard;

namespace {

RtuState fresh_rtu(std::uint8_t address) {
  RtuState st;
  st.address = address;
  return st;
}

}  // namespace

TEST_CASE("control topples a switch point") {
  RtuState st = fresh_rtu(5);
  st.switches[1] = 0;
  auto on = rtu_apply(st, make_control(5, 1, 1));
  REQUIRE(on.ok());
  CHECK(on.value().state.switches.at(1) == 1);
  CHECK_FALSE(on.value().response.has_value());

  auto off = rtu_apply(on.value().state, make_control(5, 1, 0));
  REQUIRE(off.ok());
  CHECK(off.value().state.switches.at(1) == 0);
}

TEST_CASE("check command leaves state unchanged") {
  RtuState st = fresh_rtu(5);
  st.switches[1] = 1;
  st.params[{205, 2}] = 400;
  auto out = rtu_apply(st, make_empty(192, 5));
  REQUIRE(out.ok());
  RtuState expect = st;
  expect.last_applied_seq = 0;
  CHECK(out.value().state == expect);
  CHECK_FALSE(out.value().response.has_value());
}

TEST_CASE("interrogation reads back just-written state") {
  RtuState st = fresh_rtu(5);
  auto w = rtu_apply(st, make_control(5, 1, 1));
  REQUIRE(w.ok());
  auto probe = rtu_apply(w.value().state, make_interrogation(5, 64, 1));
  REQUIRE(probe.ok());
  REQUIRE(probe.value().response.has_value());
  const Telegram& resp = *probe.value().response;
  CHECK(resp.type == kTypeStatusResponse);
  CHECK(resp.src == 5);
  CHECK(resp.dst == kMtuAddress);
  CHECK(*point_of(resp) == 1);
  CHECK(*value_of(resp) == 1);
}

TEST_CASE("parameter families write to the parameter table") {
  RtuState st = fresh_rtu(9);
  for (std::uint8_t family : {65, 66, 67, 205, 212, 207, 208, 209}) {
    auto out = rtu_apply(st, make_set_point(family, 9, 3, -250));
    REQUIRE(out.ok());
    st = out.value().state;
    CHECK(st.params.at({family, 3}) == -250);
  }
  for (std::uint8_t family : {68, 69, 70, 206}) {
    auto out = rtu_apply(st, make_set_point(family, 9, 3, 77));
    REQUIRE(out.ok());
    st = out.value().state;
    CHECK(st.params.at({family, 3}) == 77);
  }
}

TEST_CASE("flag families toggle their flags") {
  RtuState st = fresh_rtu(9);
  CHECK(st.recipient_enabled());
  CHECK(st.record_transfer_enabled());
  for (std::uint8_t family : {201, 202, 203, 204, 210, 211}) {
    auto out = rtu_apply(st, make_flag_switch(family, 9, 0, 0));
    REQUIRE(out.ok());
    st = out.value().state;
    CHECK(st.flags.at({family, 0}) == 0);
  }
  CHECK_FALSE(st.recipient_enabled());
  CHECK_FALSE(st.record_transfer_enabled());
}

TEST_CASE("replace restores switch, parameter and flag families") {
  RtuState st = fresh_rtu(9);
  st.switches[1] = 0;
  st.params[{205, 2}] = 9999;
  st.flags[{203, 0}] = 0;

  auto s1 = rtu_apply(st, make_replace(9, 64, 1, 1));
  REQUIRE(s1.ok());
  CHECK(s1.value().state.switches.at(1) == 1);

  auto s2 = rtu_apply(s1.value().state, make_replace(9, 205, 2, 400));
  REQUIRE(s2.ok());
  CHECK(s2.value().state.params.at({205, 2}) == 400);

  auto s3 = rtu_apply(s2.value().state, make_replace(9, 203, 0, 1));
  REQUIRE(s3.ok());
  CHECK(s3.value().state.flags.at({203, 0}) == 1);
}

TEST_CASE("rtu rejects mismatched address and malformed payloads") {
  RtuState st = fresh_rtu(5);
  CHECK(rtu_apply(st, make_control(6, 1, 1)).error() == DeviceError::AddressMismatch);
  Telegram bad = make_control(5, 1, 1);
  bad.payload.pop_back();
  CHECK(rtu_apply(st, bad).error() == DeviceError::PayloadSchemaMismatch);
}

TEST_CASE("vulnerability fidelity: forged frames change state like authentic ones") {
  // With no agent attached, an injected telegram is indistinguishable from a
  // real one at the device.
  EventLoop loop;
  Bus bus(loop, BusConfig{});
  std::mt19937_64 rng(5);
  MtuDevice mtu(bus, MtuConfig{}, rng);
  RtuState init = fresh_rtu(5);
  init.switches[1] = 1;
  RtuDevice rtu(bus, init);
  IntruderDevice intruder(bus);

  intruder.inject(make_control(5, 1, 0));
  loop.run_until(kSecond);
  CHECK(rtu.state().switches.at(1) == 0);

  mtu.issue(make_control(5, 1, 1), false);
  loop.run_until(2 * kSecond);
  CHECK(rtu.state().switches.at(1) == 1);
}

TEST_CASE("readback soundness over the bus") {
  EventLoop loop;
  Bus bus(loop, BusConfig{});
  std::mt19937_64 rng(5);
  MtuDevice mtu(bus, MtuConfig{}, rng);
  RtuDevice rtu(bus, fresh_rtu(5));

  mtu.issue(make_set_point(205, 5, 2, 444), false);
  mtu.issue(make_interrogation(5, 205, 2), false);
  loop.run_until(kSecond);
  CHECK(mtu.status_frames_seen() == 1);
  CHECK(rtu.state().params.at({205, 2}) == 444);
}

TEST_CASE("mtu_issue mirrors a byte-equal authenticated copy") {
  EventLoop loop;
  Bus bus(loop, BusConfig{});
  std::mt19937_64 rng(5);
  MtuDevice mtu(bus, MtuConfig{}, rng);
  RtuDevice rtu(bus, fresh_rtu(5));

  ChannelLink link(loop, 1, derive_channel_key(0, 1), 10 * kMillisecond);
  struct AgentSide : ChannelPeer {
    ChannelLink* link = nullptr;
    std::vector<Telegram> copies;
    std::vector<std::uint64_t> seqs;
    void on_channel_message(std::span<const std::uint8_t> wire) override {
      auto opened = link->open_incoming(Direction::MtuToAgent, wire);
      REQUIRE(opened.ok());
      REQUIRE(opened.value().kind == MessageKind::AuthCopy);
      seqs.push_back(opened.value().seq);
      copies.push_back(*decode_telegram_body(opened.value().body));
    }
  } agent;
  agent.link = &link;
  link.bind(&mtu, &agent);
  mtu.add_agent_link(&link, 1, 128);

  Telegram cmd = make_control(5, 1, 1);
  mtu.issue(cmd, true);
  mtu.issue(make_set_point(205, 5, 2, 10), true);
  mtu.issue(make_control(5, 2, 1), false);  // mirror suppressed
  loop.run_until(kSecond);

  REQUIRE(agent.copies.size() == 2);
  CHECK(agent.copies[0].command_equal(cmd));
  CHECK(agent.copies[0].src == kMtuAddress);
  // strictly increasing channel sequence numbers
  CHECK(agent.seqs[0] < agent.seqs[1]);
  CHECK(mtu.stats().issued == 3);
  CHECK(mtu.stats().mirrored == 2);
}

TEST_CASE("verification lookup answers from recent history only") {
  EventLoop loop;
  Bus bus(loop, BusConfig{});
  std::mt19937_64 rng(5);
  MtuDevice mtu(bus, MtuConfig{AckPolicy::LookupByHistory, 500 * kMillisecond, 0, 0}, rng);
  RtuDevice rtu(bus, fresh_rtu(5));

  Telegram cmd = make_control(5, 1, 1);
  mtu.issue(cmd, false);
  loop.run_until(50 * kMillisecond);
  CHECK(mtu.issued_recently(cmd));  // issued 50 ms ago -> positive

  Telegram attacker_only = make_control(5, 1, 0);
  CHECK_FALSE(mtu.issued_recently(attacker_only));  // history miss -> negative

  loop.run_until(kSecond);
  CHECK_FALSE(mtu.issued_recently(cmd));  // outside the matching window
}

TEST_CASE("challenges are answered while attached and alarm when detached") {
  EventLoop loop;
  Bus bus(loop, BusConfig{});
  std::mt19937_64 rng(5);
  MtuConfig cfg;
  cfg.challenge_period = 0;  // issued manually below
  MtuDevice mtu(bus, cfg, rng);

  ChannelLink link(loop, 1, derive_channel_key(0, 1), 10 * kMillisecond);
  // Minimal attached sniffer that echoes challenge nonces back.
  struct Echo : BusEndpoint, ChannelPeer {
    Bus* bus = nullptr;
    ChannelLink* link = nullptr;
    void on_frame(const BusEvent& ev) override {
      auto t = decode_telegram(ev.frame);
      if (!t.ok()) return;
      if (auto nonce = extract_challenge(t.value())) {
        link->send(Direction::AgentToMtu, MessageKind::ChallengeResponse,
                   std::span<const std::uint8_t>(nonce->data(), nonce->size()));
      }
    }
    void on_channel_message(std::span<const std::uint8_t>) override {}
  } echo;
  echo.bus = &bus;
  echo.link = &link;
  auto echo_id = bus.attach(&echo);
  link.bind(&mtu, &echo);
  mtu.add_agent_link(&link, 1, 128);

  mtu.issue_challenge();
  loop.run_until(kSecond);
  CHECK(mtu.stats().challenges_issued == 1);
  CHECK(mtu.stats().challenges_answered == 1);
  CHECK(mtu.stats().removal_suspected == 0);

  // Detach: the sniffer no longer hears the void-address telegram.
  bus.detach(echo_id);
  mtu.issue_challenge();
  loop.run_until(2 * kSecond);
  CHECK(mtu.stats().challenges_issued == 2);
  CHECK(mtu.stats().challenges_answered == 1);
  CHECK(mtu.stats().removal_suspected == 1);
}

TEST_CASE("two outstanding challenges are both answered, order-independent") {
  EventLoop loop;
  Bus bus(loop, BusConfig{});
  std::mt19937_64 rng(5);
  MtuDevice mtu(bus, MtuConfig{}, rng);
  ChannelLink link(loop, 1, derive_channel_key(0, 1), 10 * kMillisecond);

  struct Collector : BusEndpoint, ChannelPeer {
    ChannelLink* link = nullptr;
    std::vector<std::array<std::uint8_t, 16>> nonces;
    void on_frame(const BusEvent& ev) override {
      auto t = decode_telegram(ev.frame);
      if (!t.ok()) return;
      if (auto nonce = extract_challenge(t.value())) nonces.push_back(*nonce);
    }
    void on_channel_message(std::span<const std::uint8_t>) override {}
    void answer(std::size_t i) {
      link->send(Direction::AgentToMtu, MessageKind::ChallengeResponse,
                 std::span<const std::uint8_t>(nonces[i].data(), 16));
    }
  } sniffer;
  sniffer.link = &link;
  bus.attach(&sniffer);
  link.bind(&mtu, &sniffer);
  mtu.add_agent_link(&link, 1, 128);

  mtu.issue_challenge();
  mtu.issue_challenge();
  loop.run_until(30 * kMillisecond);
  REQUIRE(sniffer.nonces.size() == 2);
  sniffer.answer(1);  // reversed order
  sniffer.answer(0);
  loop.run_until(kSecond);
  CHECK(mtu.stats().challenges_answered == 2);
  CHECK(mtu.stats().removal_suspected == 0);

  // Replaying an old response is rejected: the nonce is single use.
  sniffer.answer(0);
  loop.run_until(2 * kSecond);
  CHECK(mtu.stats().challenges_answered == 2);
  CHECK(mtu.stats().stale_challenge_responses == 1);
}

TEST_CASE("injection carries the forged master address") {
  EventLoop loop;
  Bus bus(loop, BusConfig{});
  struct Sniffer : BusEndpoint {
    std::vector<Telegram> seen;
    void on_frame(const BusEvent& ev) override {
      auto t = decode_telegram(ev.frame);
      if (t.ok()) seen.push_back(t.value());
    }
  } sniffer;
  bus.attach(&sniffer);
  IntruderDevice intruder(bus);
  Telegram forged = make_control(5, 1, 0);
  forged.src = 77;  // the intruder hides its own identity regardless
  intruder.inject(forged);
  loop.run_until(kSecond);
  REQUIRE(sniffer.seen.size() == 1);
  CHECK(sniffer.seen[0].src == kMtuAddress);
}
