#include <gtest/gtest.h>

#include "abl/classifier.hpp"
#include "abl/sim/payload.hpp"
#include "abl/sim/scenario.hpp"
#include "abl/sim/simulator.hpp"
#include "abl/smtp/session.hpp"
#include "random.hpp"

namespace abl::sim {
namespace {

using testing::Gen;

SenderProfile spammer(std::size_t count, std::size_t m, std::size_t p,
                      AddressRotation rotation = AddressRotation::Fixed)
{
  SenderProfile s;
  s.name = "spam";
  s.kind = SenderKind::Spammer;
  s.count = count;
  s.messages_per_sender = m;
  s.payload_octets = p;
  s.address_rotation = rotation;
  return s;
}

SenderProfile legit(std::size_t count, std::size_t m, std::size_t p)
{
  SenderProfile s;
  s.name = "legit";
  s.count = count;
  s.messages_per_sender = m;
  s.payload_octets = p;
  return s;
}

std::string unstuff(std::string const& wire)
{
  smtp::SessionState s;
  s.phase = smtp::Phase::ReceivingData;
  auto const p = smtp::receive_data(s, wire);
  EXPECT_TRUE(p.terminated);
  EXPECT_EQ(p.consumed, wire.size());
  return s.data.body;
}

TEST(Payload, Shape)
{
  std::vector<std::string> const forbidden{"lottery"};
  Gen g(1);
  bool saw_dot_line = false;
  for (int i = 0; i < 500; ++i) {
    auto const octets = static_cast<std::size_t>(g.uniform(9, 20000));
    bool const spam = g.chance(0.5);
    auto const body = make_payload(octets, g.uniform(0, ~0ull), spam ? "lottery" : "", spam ? std::vector<std::string>{}
                                                                                        : forbidden);
    ASSERT_EQ(body.size(), octets);
    ASSERT_TRUE(body.ends_with("\r\n"));
    std::size_t start = 0;
    while (start < body.size()) {
      auto const eol = body.find("\r\n", start);
      ASSERT_NE(eol, std::string::npos);
      EXPECT_LE(eol - start, 76u);
      EXPECT_EQ(body.substr(start, eol - start).find_first_of("\r\n"), std::string::npos);
      saw_dot_line = saw_dot_line || body[start] == '.';
      start = eol + 2;
    }
    if (spam)
      EXPECT_TRUE(body.starts_with("lottery"));
    else
      EXPECT_EQ(classify::count_occurrences(body, "lottery"), 0u);
    EXPECT_EQ(unstuff(dot_stuff(body)), body);
  }
  EXPECT_TRUE(saw_dot_line);
}

TEST(Payload, MinimalSizes)
{
  EXPECT_EQ(make_payload(2, 1, "", {}), "\r\n");
  EXPECT_EQ(make_payload(9, 1, "lottery", {}), "lottery\r\n");
  EXPECT_EQ(make_payload(3, 1, "", {}).size(), 3u);
}

TEST(Payload, DeterministicPerSeed)
{
  EXPECT_EQ(make_payload(5000, 42, "lottery", {}), make_payload(5000, 42, "lottery", {}));
  EXPECT_NE(make_payload(5000, 42, "lottery", {}), make_payload(5000, 43, "lottery", {}));
  EXPECT_EQ(mix_seed(1, 2, 3), mix_seed(1, 2, 3));
  EXPECT_NE(mix_seed(1, 2, 3), mix_seed(1, 3, 2));
}

TEST(PayloadProperty, DotStuffRoundTrip)
{
  Gen g(2);
  for (int i = 0; i < 5000; ++i) {
    auto body = g.string_from(".a\r\n", 0, 30) + "\r\n";
    EXPECT_EQ(unstuff(dot_stuff(body)), body) << ::testing::PrintToString(body);
  }
}

TEST(Scenario, Parse)
{
  auto const sc = parse_scenario(R"(seed = 9
runs = abl_on
policy = tempfail451
base_ttl_s = 60

[sender.bulk]
kind = spammer
count = 3
messages = 4
payload_octets = 512
address_rotation = per-message
retry_on_reject = false

[sender.office]
kind = legit
)");
  EXPECT_EQ(sc.rng_seed, 9u);
  EXPECT_EQ(sc.runs, RunSelection::AblOn);
  EXPECT_EQ(sc.server.policy, smtp::RejectPolicy::temp_fail());
  EXPECT_EQ(sc.server.ttl_policy.base_ttl, 60);
  ASSERT_EQ(sc.senders.size(), 2u);
  EXPECT_EQ(sc.senders[0].name, "bulk");
  EXPECT_EQ(sc.senders[0].kind, SenderKind::Spammer);
  EXPECT_EQ(sc.senders[0].count, 3u);
  EXPECT_EQ(sc.senders[0].messages_per_sender, 4u);
  EXPECT_EQ(sc.senders[0].address_rotation, AddressRotation::PerMessage);
  EXPECT_FALSE(sc.senders[0].retry_on_reject);
  EXPECT_EQ(sc.senders[1].kind, SenderKind::Legit);
}

TEST(Scenario, Rejections)
{
  EXPECT_THROW(parse_scenario("[sender.a]\nmessages = 0\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("[sender.a]\nkind = spammer\npayload_octets = 5\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("[sender.a]\nkind = robot\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("[sender.a b]\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("[other]\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("keywords = free:1\n"), ScenarioError);  // trigger no longer detected
  EXPECT_THROW(parse_scenario("bogus = 1\n"), ScenarioError);
  EXPECT_THROW(parse_scenario("hook_command = /bin/true\n"), ScenarioError);
}

ScenarioConfig scenario(std::vector<SenderProfile> senders)
{
  ScenarioConfig sc;
  sc.senders = std::move(senders);
  sc.rng_seed = 17;
  sc.validate();
  return sc;
}

TEST(Simulator, SingleSpammerReducesNinetyPercent)
{
  auto const report = run_scenario(scenario({spammer(1, 10, 10240)}));
  ASSERT_TRUE(report.has_reduction());
  EXPECT_EQ(report.abl_off->data_octets, 102400u);
  EXPECT_EQ(report.abl_on->data_octets, 10240u);
  EXPECT_EQ(report.abl_on->client_data_octets, report.abl_on->data_octets);
  EXPECT_EQ(report.abl_off->client_data_octets, report.abl_off->data_octets);
  EXPECT_EQ(report.reduction_numerator() * 10, report.reduction_denominator() * 9);
  EXPECT_EQ(report.abl_on->blocked_connect, 9u);
  EXPECT_EQ(report.abl_on->blocked_attempts_refreshed, 9u);
  EXPECT_EQ(report.abl_on->connections, 10u);
  EXPECT_TRUE(format_report(report).ends_with("\nreduction,0.900000\n"));
}

TEST(Simulator, SingleMessageIsAlwaysTransferred)
{
  auto const report = run_scenario(scenario({spammer(1, 1, 700)}));
  EXPECT_EQ(report.abl_on->data_octets, 700u);
  EXPECT_EQ(report.reduction_numerator(), 0);
  EXPECT_TRUE(format_report(report).ends_with("\nreduction,0.000000\n"));
}

TEST(Simulator, LegitTrafficIsUntouched)
{
  auto const report = run_scenario(scenario({legit(3, 4, 900)}));
  EXPECT_EQ(report.abl_on->transcripts, report.abl_off->transcripts);
  EXPECT_EQ(report.abl_on->accepted, 12u);
  EXPECT_EQ(report.abl_on->legit_accepted, report.abl_off->legit_accepted);
  EXPECT_EQ(report.reduction_numerator(), 0);
}

TEST(Simulator, RetryOffStopsAfterFirstRejection)
{
  auto p = spammer(1, 5, 100);
  p.retry_on_reject = false;
  auto const report = run_scenario(scenario({p}));
  EXPECT_EQ(report.abl_on->attempted, 2u);
  EXPECT_EQ(report.abl_off->attempted, 5u);
}

TEST(Simulator, MailCheckpointWhenOnlyFullIdentityIsListed)
{
  // Tempfail keeps the session open, so the client also meets the MAIL checkpoint.
  auto sc = scenario({spammer(1, 3, 100)});
  sc.server.policy = smtp::RejectPolicy::temp_fail();
  sc.runs = RunSelection::AblOn;
  auto const r = run_scenario(sc);
  EXPECT_EQ(r.abl_on->data_octets, 100u);
  EXPECT_EQ(r.abl_on->blocked_connect, 2u);
  EXPECT_FALSE(r.abl_off.has_value());
}

TEST(Report, Format)
{
  SimReport r;
  RunResult on;
  on.name = "abl_on";
  on.connections = 10;
  on.attempted = 10;
  on.accepted = 1;
  on.blocked_connect = 9;
  on.data_octets = 10240;
  on.bytes_in = 11000;
  on.bytes_out = 900;
  r.abl_on = on;
  EXPECT_EQ(format_report(r),
            "run,connections,attempted,accepted,blocked_connect,blocked_mail,data_octets,bytes_in,bytes_out\n"
            "abl_on,10,10,1,9,0,10240,11000,900\n");
  auto off = on;
  off.name = "abl_off";
  off.data_octets = 0;
  r.abl_off = off;
  EXPECT_TRUE(format_report(r).ends_with("\nreduction,0.000000\n"));
}

}  // namespace
}  // namespace abl::sim
