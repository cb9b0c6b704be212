#include <thread>

#include <gtest/gtest.h>

#include "abl/mta/admin.hpp"
#include "abl/mta/server.hpp"
#include "harness.hpp"
#include "transcripts.hpp"

namespace abl::mta {
namespace {

using namespace std::chrono_literals;

net::Endpoint admin_of(Server const& s) { return {"127.0.0.1", s.admin_port()}; }

TEST(ServerTcp, ConformanceTranscripts)
{
  Server server(testing::transcript_config());
  server.start();
  for (auto const& t : testing::conformance_transcripts())
    EXPECT_EQ(testing::replay_over_tcp(t, server.smtp_port()), "");
}

TEST(AdminService, Commands)
{
  blacklist::AblStore store;
  Metrics metrics;
  AdminService admin(store, metrics, [] { return 1000; }, nullptr);

  EXPECT_EQ(admin.handle("BL ADD 192.0.2.7 - manual").render(), "OK\n");
  EXPECT_EQ(admin.handle("bl add 192.0.2.8 <S@X.example> kw  lottery x1").render(), "OK\n");
  EXPECT_EQ(admin.handle("BL LIST").render(),
            "192.0.2.7\t-\t1000\t1000\t1\t4600\tmanual\n"
            "192.0.2.8\tS@x.example\t1000\t1000\t1\t4600\tkw  lottery x1\n"
            "OK\n");
  EXPECT_EQ(admin.handle("BL DEL 192.0.2.9 -").render(), "ERR no such entry\n");
  EXPECT_EQ(admin.handle("BL DEL 192.0.2.7 -").render(), "OK\n");
  EXPECT_EQ(admin.handle("BL ADD not-an-ip -").render(), "ERR invalid identity\n");
  EXPECT_EQ(admin.handle("EXPIRE").render(), "removed=0\nOK\n");
  EXPECT_EQ(admin.handle("SNAPSHOT").render(), "ERR snapshots are not configured\n");
  EXPECT_EQ(admin.handle("FROB").render(), "ERR unknown command: FROB\n");
  EXPECT_TRUE(admin.handle("QUIT").close);

  auto const stats = admin.handle("STATS");
  ASSERT_TRUE(stats.ok());
  EXPECT_EQ(stats.lines.front(), "connections_total=0");
  EXPECT_EQ(stats.lines.size(), 9u);
}

TEST(AdminService, ResponseParsing)
{
  std::size_t used = 0;
  auto const r = parse_admin_response("a=1\nb=2\nOK\nnext", &used);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->lines, (std::vector<std::string>{"a=1", "b=2"}));
  EXPECT_EQ(used, 11u);
  EXPECT_EQ(parse_admin_response("a=1\n"), std::nullopt);
  EXPECT_EQ(parse_admin_response("ERR nope\n")->error, "nope");
}

TEST(ServerTcp, AdminOverTheWire)
{
  auto cfg = testing::transcript_config();
  Server server(cfg);
  server.start();
  EXPECT_TRUE(admin_request(admin_of(server), "BL ADD 192.0.2.7 - manual").ok());
  auto const list = admin_request(admin_of(server), "BL LIST");
  ASSERT_EQ(list.lines.size(), 1u);
  EXPECT_TRUE(list.lines.front().starts_with("192.0.2.7\t-\t"));
  EXPECT_EQ(admin_request(admin_of(server), "BL DEL 192.0.2.9 -").error, "no such entry");

  // Several commands on one connection.
  net::LineStream s(net::connect_tcp(admin_of(server)));
  s.write("STATS\nQUIT\n");
  std::string all;
  for (int i = 0; i < 11; ++i)
    all += s.read_line();
  EXPECT_TRUE(all.ends_with("OK\nOK\n"));
}

TEST(ServerTcp, BlacklistedClientGets554OverTcp)
{
  auto cfg = testing::transcript_config();
  cfg.reject_linger = 2000ms;
  Server server(cfg);
  server.start();
  server.store().record_spam(blacklist::SenderIdentity::ip_only("127.0.0.1"), "manual", system_now());
  auto sock = net::connect_tcp({"127.0.0.1", server.smtp_port()});
  EXPECT_EQ(testing::read_exactly(sock, 26, 5s), "554 5.7.1 blocked by ABL\r\n");
  net::write_all(sock, "QUIT\r\n");
  EXPECT_EQ(testing::read_exactly(sock, 100, 5s), "221 2.0.0 mx.test closing connection\r\n");
}

TEST(ServerTcp, SessionCapAnswers421)
{
  auto cfg = testing::transcript_config();
  cfg.max_concurrent_sessions = 2;
  Server server(cfg);
  server.start();
  net::Endpoint const ep{"127.0.0.1", server.smtp_port()};
  std::string const banner = "220 mx.test ESMTP ready\r\n";
  auto a = net::connect_tcp(ep);
  auto b = net::connect_tcp(ep);
  EXPECT_EQ(testing::read_exactly(a, banner.size(), 5s), banner);
  EXPECT_EQ(testing::read_exactly(b, banner.size(), 5s), banner);
  auto c = net::connect_tcp(ep);
  EXPECT_EQ(testing::read_exactly(c, 100, 5s), "421 4.3.2 too many sessions, try again later\r\n");

  net::write_all(a, "QUIT\r\n");
  EXPECT_EQ(testing::read_exactly(a, 100, 5s), "221 2.0.0 mx.test closing connection\r\n");
  auto const deadline = std::chrono::steady_clock::now() + 5s;
  while (server.active_sessions() > 1 && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(1ms);
  auto d = net::connect_tcp(ep);
  EXPECT_EQ(testing::read_exactly(d, banner.size(), 5s), banner);
  EXPECT_EQ(server.metrics().snapshot().connections_total, 4u);
}

TEST(ServerTcp, PeriodicSnapshots)
{
  testing::TempDir dir;
  auto cfg = testing::transcript_config();
  cfg.snapshot_path = (dir / "abl.snapshot").string();
  cfg.snapshot_interval = 1s;
  Server server(cfg);
  server.start();
  server.store().record_spam(blacklist::SenderIdentity::ip_only("192.0.2.1"), "x", system_now());
  std::this_thread::sleep_for(3500ms);
  EXPECT_GE(server.snapshots_written(), 3u);
  EXPECT_EQ(testing::slurp(cfg.snapshot_path), server.store().persist());
  EXPECT_FALSE(std::filesystem::exists(cfg.snapshot_path + ".tmp"));
}

TEST(ServerTcp, StopWritesFinalSnapshotKillDoesNot)
{
  testing::TempDir dir;
  auto cfg = testing::transcript_config();
  cfg.snapshot_path = (dir / "abl.snapshot").string();
  cfg.snapshot_interval = 3600s;
  {
    Server server(cfg);
    server.start();
    server.store().record_spam(blacklist::SenderIdentity::ip_only("192.0.2.1"), "x", system_now());
    server.kill();
  }
  EXPECT_FALSE(std::filesystem::exists(cfg.snapshot_path));
  {
    Server server(cfg);
    server.start();
    server.store().record_spam(blacklist::SenderIdentity::ip_only("192.0.2.2"), "x", system_now());
    server.stop();
  }
  ASSERT_TRUE(std::filesystem::exists(cfg.snapshot_path));
  Server again(cfg);
  again.start();
  EXPECT_TRUE(blacklist::is_blacklisted(
      again.store().check(blacklist::SenderIdentity::ip_only("192.0.2.2"), system_now())));
}

TEST(ServerTcp, StopClosesIdleSessionsAfterGrace)
{
  auto cfg = testing::transcript_config();
  cfg.shutdown_grace = 1s;
  Server server(cfg);
  server.start();
  auto sock = net::connect_tcp({"127.0.0.1", server.smtp_port()});
  testing::read_exactly(sock, 25, 5s);
  auto const started = std::chrono::steady_clock::now();
  server.stop();
  EXPECT_LT(std::chrono::steady_clock::now() - started, 3s);
  EXPECT_TRUE(testing::wait_for_eof(sock, 2s));
}

TEST(ServerTcp, CorruptSnapshotRefusesToStart)
{
  testing::TempDir dir;
  auto cfg = testing::transcript_config();
  cfg.snapshot_path = (dir / "abl.snapshot").string();
  testing::spit(cfg.snapshot_path, "ABLv1\n192.0.2.1\t-\t1\t1\t1\t99999999999\tok\n192.0.2.2\tbroken\n");
  Server server(cfg);
  try {
    server.start();
    FAIL() << "start() accepted a corrupt snapshot";
  } catch (blacklist::FormatError const& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

}  // namespace
}  // namespace abl::mta
