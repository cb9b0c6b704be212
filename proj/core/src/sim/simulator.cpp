#include "abl/sim/simulator.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "abl/mta/admin.hpp"
#include "abl/mta/server.hpp"
#include "abl/net.hpp"
#include "abl/sim/payload.hpp"
#include "abl/smtp/reply.hpp"

namespace abl::sim {
namespace {

struct SenderState {
  SenderProfile const* profile;
  std::size_t global_index;
  std::size_t local_index;
  std::string ip;
  std::size_t next_message = 0;
  bool done = false;
};

std::string sender_ip(std::size_t i)
{
  return fmt::format("127.1.{}.{}", i / 250, i % 250 + 1);
}

std::string envelope_sender(SenderState const& s, std::size_t message)
{
  auto const& name = s.profile->name;
  if (s.profile->address_rotation == AddressRotation::PerMessage)
    return fmt::format("{}{}.m{}@{}{}.example", name, s.local_index, message, name, message);
  return fmt::format("{}{}@{}.example", name, s.local_index, name);
}

int reply_code(std::string const& reply)
{
  return (reply[0] - '0') * 100 + (reply[1] - '0') * 10 + (reply[2] - '0');
}

enum class Attempt { Accepted, RejectedAtConnect, RejectedAtMail, RejectedAfterData };

// One message attempt over its own connection.
class ClientSession {
public:
  ClientSession(net::Endpoint const& server, std::string const& source_ip)
      : stream_(net::connect_tcp(server, source_ip))
  {
  }

  std::string const& transcript() const noexcept { return transcript_; }

  std::string receive()
  {
    auto r = stream_.read_reply();
    transcript_ += "S: ";
    transcript_ += r;
    return r;
  }

  void send(std::string_view data)
  {
    transcript_ += "C: ";
    transcript_ += data;
    if (data.empty() || data.back() != '\n')
      transcript_ += '\n';
    stream_.write(data);
  }

  // Sends `cmd` and returns the reply code.
  int command(std::string const& cmd)
  {
    send(cmd);
    return reply_code(receive());
  }

  [[noreturn]] void violation(std::string_view what) const
  {
    auto excerpt = transcript_.size() > 600 ? "..." + transcript_.substr(transcript_.size() - 600) : transcript_;
    throw SimError(fmt::format("client protocol violation: {}\n{}", what, excerpt));
  }

  void quit()
  {
    if (command("QUIT\r\n") != 221)
      violation("QUIT not answered with 221");
  }

private:
  net::LineStream stream_;
  std::string transcript_;
};

Attempt run_attempt(ClientSession& c, SenderState const& s, std::size_t message, std::string const& body,
                    RunResult& result)
{
  auto const greeting = reply_code(c.receive());
  if (greeting == 554)
    return Attempt::RejectedAtConnect;  // dropped without QUIT, as the server closes anyway
  if (greeting == 451) {
    c.quit();
    return Attempt::RejectedAtConnect;
  }
  if (greeting != 220)
    c.violation("unexpected greeting");

  if (c.command(fmt::format("EHLO {}.sim.example\r\n", s.profile->name)) != 250)
    c.violation("EHLO refused");

  auto const mail = c.command(fmt::format("MAIL FROM:<{}>\r\n", envelope_sender(s, message)));
  if (mail == 554)
    return Attempt::RejectedAtMail;
  if (mail == 451) {
    c.quit();
    return Attempt::RejectedAtMail;
  }
  if (mail != 250)
    c.violation("MAIL FROM refused");

  if (c.command("RCPT TO:<postmaster@abl.example>\r\n") != 250)
    c.violation("RCPT TO refused");
  if (c.command("DATA\r\n") != 354)
    c.violation("DATA refused");

  c.send(dot_stuff(body));
  result.client_data_octets += body.size();
  auto const final_code = reply_code(c.receive());
  c.quit();
  if (final_code == 250)
    return Attempt::Accepted;
  if (final_code == 554 || final_code == 552)
    return Attempt::RejectedAfterData;
  c.violation("unexpected reply after DATA");
}

std::vector<std::string> forbidden_keywords(ScenarioConfig const& config)
{
  std::vector<std::string> out;
  for (auto const& rule : config.server.keywords)
    out.push_back(rule.keyword);
  return out;
}

}  // namespace

RunResult run_once(ScenarioConfig const& config, bool abl_enabled)
{
  using clock = std::chrono::steady_clock;
  auto const started = clock::now();

  auto server_config = config.server;
  server_config.abl_enabled = abl_enabled;
  server_config.listen_address = "127.0.0.1:0";
  server_config.admin_listen_address = "127.0.0.1:0";
  server_config.snapshot_path.clear();
  spdlog::set_level(spdlog::level::from_str(server_config.log_level));

  mta::Server server(server_config);
  try {
    server.start();
  } catch (std::exception const& e) {
    throw SimError(std::string("server startup failed: ") + e.what());
  }
  net::Endpoint const smtp{"127.0.0.1", server.smtp_port()};
  net::Endpoint const admin{"127.0.0.1", server.admin_port()};

  RunResult result;
  result.name = abl_enabled ? "abl_on" : "abl_off";

  std::vector<SenderState> senders;
  for (auto const& profile : config.senders)
    for (std::size_t j = 0; j < profile.count; ++j)
      senders.push_back({&profile, senders.size(), j, sender_ip(senders.size())});

  auto const forbidden = forbidden_keywords(config);
  std::vector<std::string> const no_keywords;

  // Round-robin: one message attempt per sender per round, in profile order.
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto& s : senders) {
      if (s.done)
        continue;
      progress = true;
      auto const message = s.next_message++;
      bool const spammer = s.profile->kind == SenderKind::Spammer;
      auto const body = make_payload(s.profile->payload_octets, mix_seed(config.rng_seed, s.global_index, message),
                                     spammer ? std::string_view(config.trigger_keyword) : std::string_view{},
                                     spammer ? no_keywords : forbidden);

      ++result.attempted;
      ClientSession client(smtp, s.ip);
      auto const outcome = run_attempt(client, s, message, body, result);
      result.transcripts.push_back(client.transcript());

      if (outcome == Attempt::Accepted)
        ++(spammer ? result.spam_accepted : result.legit_accepted);
      bool const rejected = outcome != Attempt::Accepted;
      if (s.next_message >= s.profile->messages_per_sender || (rejected && !s.profile->retry_on_reject))
        s.done = true;
      if (!s.done && s.profile->inter_message_delay.count() > 0)
        std::this_thread::sleep_for(s.profile->inter_message_delay);
    }
  }

  // A rejected client may hang up before the server has logged the session;
  // wait for every session to wind down so the counters are final.
  auto const deadline = clock::now() + std::chrono::seconds(30);
  while (server.active_sessions() > 0 && clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(1));

  auto const stats = mta::admin_request(admin, "STATS");
  if (!stats.ok())
    throw SimError("STATS failed: " + stats.error.value_or(""));
  auto const m = mta::MetricsSnapshot::from_lines(stats.lines);
  result.connections = m.connections_total;
  result.accepted = m.messages_accepted;
  result.blocked_connect = m.sessions_blocked_at_connect;
  result.blocked_mail = m.sessions_blocked_at_mail;
  result.data_octets = m.data_octets_received;
  result.bytes_in = m.bytes_in;
  result.bytes_out = m.bytes_out;
  result.blocked_attempts_refreshed = m.blocked_attempts_refreshed;

  server.stop();
  result.wall_seconds = std::chrono::duration<double>(clock::now() - started).count();

  if (result.data_octets != result.client_data_octets)
    throw SimError(fmt::format("{}: server counted {} DATA octets but clients delivered {}", result.name,
                               result.data_octets, result.client_data_octets));
  return result;
}

SimReport run_scenario(ScenarioConfig const& config)
{
  config.validate();
  SimReport report;
  if (config.runs != RunSelection::AblOff)
    report.abl_on = run_once(config, true);
  if (config.runs != RunSelection::AblOn)
    report.abl_off = run_once(config, false);
  return report;
}

std::int64_t SimReport::reduction_numerator() const noexcept
{
  if (!has_reduction() || abl_off->data_octets == 0)
    return 0;
  return static_cast<std::int64_t>(abl_off->data_octets) - static_cast<std::int64_t>(abl_on->data_octets);
}

std::int64_t SimReport::reduction_denominator() const noexcept
{
  if (!has_reduction() || abl_off->data_octets == 0)
    return 1;
  return static_cast<std::int64_t>(abl_off->data_octets);
}

double SimReport::reduction() const noexcept
{
  return static_cast<double>(reduction_numerator()) / static_cast<double>(reduction_denominator());
}

std::string format_report(SimReport const& report)
{
  std::string out = "run,connections,attempted,accepted,blocked_connect,blocked_mail,data_octets,bytes_in,bytes_out\n";
  for (auto const* run : {&report.abl_on, &report.abl_off}) {
    if (!*run)
      continue;
    auto const& r = **run;
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.name, r.connections, r.attempted, r.accepted,
                       r.blocked_connect, r.blocked_mail, r.data_octets, r.bytes_in, r.bytes_out);
  }
  if (report.has_reduction())
    out += fmt::format("reduction,{:.6f}\n", report.reduction());
  return out;
}

void write_report(SimReport const& report, std::filesystem::path const& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << format_report(report);
  out.flush();
  if (!out)
    throw SimError("cannot write report to " + path.string());
}

}  // namespace abl::sim
