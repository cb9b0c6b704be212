#include <gtest/gtest.h>

#include <sstream>

#include "abl/mta/server.hpp"
#include "cli.hpp"
#include "harness.hpp"

namespace abl::cli {
namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args)
{
  args.insert(args.begin(), "abl");
  std::ostringstream out, err;
  int const status = run(args, out, err);
  return {status, out.str(), err.str()};
}

int dead_port()
{
  // Bind and release, so nothing is listening there afterwards.
  auto sock = net::listen_tcp(net::Endpoint::parse("127.0.0.1:0"));
  return net::local_port(sock);
}

class LiveServer : public ::testing::Test {
protected:
  void SetUp() override
  {
    auto config = testing::transcript_config();
    server_ = std::make_unique<mta::Server>(config);
    server_->start();
    admin_ = "127.0.0.1:" + std::to_string(server_->admin_port());
  }
  void TearDown() override { server_->stop(); }

  std::unique_ptr<mta::Server> server_;
  std::string admin_;
};

TEST(Cli, StatsWithServerDownExits2)
{
  auto const r = invoke({"stats", "--admin", "127.0.0.1:" + std::to_string(dead_port())});
  EXPECT_EQ(r.status, kUnreachable);
  EXPECT_NE(r.err.find("cannot reach"), std::string::npos);
}

TEST(Cli, UsageErrorsExit1)
{
  EXPECT_EQ(invoke({}).status, kFailure);
  EXPECT_EQ(invoke({"frobnicate"}).status, kFailure);
  EXPECT_EQ(invoke({"bl"}).status, kFailure);
  EXPECT_EQ(invoke({"bl", "add", "192.0.2.7"}).status, kFailure);
  EXPECT_EQ(invoke({"serve", "--no-such-flag", "1"}).status, kFailure);
  EXPECT_EQ(invoke({"serve", "--max_message_octets", "zero"}).status, kFailure);
  EXPECT_EQ(invoke({"--help"}).status, kOk);
}

TEST(Cli, MissingConfigFileExits1)
{
  EXPECT_EQ(invoke({"-c", "/nonexistent/abl.conf", "stats"}).status, kFailure);
}

TEST_F(LiveServer, BlacklistAdminRoundTrip)
{
  auto r = invoke({"bl", "add", "192.0.2.7", "-", "manual", "--admin", admin_});
  EXPECT_EQ(r.status, kOk);
  EXPECT_EQ(r.out, "OK\n");
  EXPECT_EQ(server_->store().size(), 1u);

  r = invoke({"bl", "list", "--admin", admin_});
  EXPECT_EQ(r.status, kOk);
  EXPECT_NE(r.out.find("192.0.2.7\t-\t"), std::string::npos) << r.out;
  EXPECT_TRUE(r.out.ends_with("\tmanual\nOK\n")) << r.out;

  r = invoke({"bl", "del", "192.0.2.7", "-", "--admin", admin_});
  EXPECT_EQ(r.status, kOk);
  EXPECT_EQ(server_->store().size(), 0u);

  r = invoke({"bl", "del", "192.0.2.7", "-", "--admin", admin_});
  EXPECT_EQ(r.status, kFailure);
  EXPECT_EQ(r.out, "ERR no such entry\n");
}

TEST_F(LiveServer, ReasonWordsAreJoined)
{
  auto const r = invoke({"bl", "add", "192.0.2.8", "spam@x.example", "seen", "in", "trap", "--admin", admin_});
  ASSERT_EQ(r.status, kOk);
  EXPECT_EQ(server_->store().entries().at(0).reason, "seen in trap");
}

TEST_F(LiveServer, Stats)
{
  auto const r = invoke({"stats", "--admin", admin_});
  EXPECT_EQ(r.status, kOk);
  EXPECT_TRUE(r.out.starts_with("connections_total=0\n")) << r.out;
  EXPECT_TRUE(r.out.ends_with("OK\n"));
}

TEST_F(LiveServer, AdminAddressFromConfigFile)
{
  testing::TempDir dir;
  testing::spit(dir / "abl.conf", "admin_listen_address = " + admin_ + "\n");
  auto const r = invoke({"-c", (dir / "abl.conf").string(), "stats"});
  EXPECT_EQ(r.status, kOk) << r.err;
}

TEST(Cli, SimulateToStdoutAndFile)
{
  testing::TempDir dir;
  testing::spit(dir / "scenario.cfg", "seed = 3\n[sender.spam]\nkind = spammer\nmessages = 10\npayload_octets = 10240\n");
  auto const r = invoke({"simulate", (dir / "scenario.cfg").string()});
  ASSERT_EQ(r.status, kOk) << r.err;
  EXPECT_TRUE(r.out.ends_with("\nreduction,0.900000\n")) << r.out;

  auto const f = invoke({"simulate", (dir / "scenario.cfg").string(), "--out", (dir / "out.csv").string()});
  ASSERT_EQ(f.status, kOk) << f.err;
  EXPECT_EQ(testing::slurp(dir / "out.csv"), r.out);
}

TEST(Cli, SimulateRejectsBadScenario)
{
  testing::TempDir dir;
  testing::spit(dir / "bad.cfg", "[sender.x]\nmessages = 0\n");
  auto const r = invoke({"simulate", (dir / "bad.cfg").string()});
  EXPECT_EQ(r.status, kFailure);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(invoke({"simulate", (dir / "missing.cfg").string()}).status, kFailure);
}

}  // namespace
}  // namespace abl::cli
