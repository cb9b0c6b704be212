#include "abl/mta/metrics.hpp"

#include <fmt/format.h>

#include "abl/util/text.hpp"

namespace abl::mta {

std::vector<std::pair<std::string_view, std::uint64_t>> MetricsSnapshot::fields() const
{
  return {
      {"connections_total", connections_total},
      {"sessions_blocked_at_connect", sessions_blocked_at_connect},
      {"sessions_blocked_at_mail", sessions_blocked_at_mail},
      {"messages_accepted", messages_accepted},
      {"messages_classified_spam", messages_classified_spam},
      {"bytes_in", bytes_in},
      {"bytes_out", bytes_out},
      {"data_octets_received", data_octets_received},
      {"blocked_attempts_refreshed", blocked_attempts_refreshed},
  };
}

std::vector<std::string> MetricsSnapshot::to_lines() const
{
  std::vector<std::string> out;
  for (auto const& [k, v] : fields())
    out.push_back(fmt::format("{}={}", k, v));
  return out;
}

MetricsSnapshot MetricsSnapshot::from_lines(std::vector<std::string> const& lines)
{
  MetricsSnapshot m;
  for (auto const& line : lines) {
    auto const eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    auto const key = std::string_view(line).substr(0, eq);
    auto const value = text::parse_uint(text::trim(std::string_view(line).substr(eq + 1)));
    if (!value)
      continue;
    if (key == "connections_total") m.connections_total = *value;
    else if (key == "sessions_blocked_at_connect") m.sessions_blocked_at_connect = *value;
    else if (key == "sessions_blocked_at_mail") m.sessions_blocked_at_mail = *value;
    else if (key == "messages_accepted") m.messages_accepted = *value;
    else if (key == "messages_classified_spam") m.messages_classified_spam = *value;
    else if (key == "bytes_in") m.bytes_in = *value;
    else if (key == "bytes_out") m.bytes_out = *value;
    else if (key == "data_octets_received") m.data_octets_received = *value;
    else if (key == "blocked_attempts_refreshed") m.blocked_attempts_refreshed = *value;
  }
  return m;
}

bool MetricsSnapshot::dominates(MetricsSnapshot const& earlier) const
{
  auto const now = fields();
  auto const then = earlier.fields();
  for (std::size_t i = 0; i < now.size(); ++i)
    if (now[i].second < then[i].second)
      return false;
  return true;
}

MetricsSnapshot Metrics::snapshot() const
{
  MetricsSnapshot s;
  s.sessions_blocked_at_connect = sessions_blocked_at_connect.load();
  s.sessions_blocked_at_mail = sessions_blocked_at_mail.load();
  s.connections_total = connections_total.load();
  s.messages_accepted = messages_accepted.load();
  s.messages_classified_spam = messages_classified_spam.load();
  s.bytes_in = bytes_in.load();
  s.bytes_out = bytes_out.load();
  s.data_octets_received = data_octets_received.load();
  s.blocked_attempts_refreshed = blocked_attempts_refreshed.load();
  return s;
}

}  // namespace abl::mta
