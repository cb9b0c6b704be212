#include "abl/mta/admin.hpp"

#include <fmt/format.h>

#include "abl/util/text.hpp"

namespace abl::mta {
namespace {

AdminResponse err(std::string message)
{
  AdminResponse r;
  r.error = std::move(message);
  return r;
}

std::optional<blacklist::SenderIdentity> identity_from(std::string_view ip, std::string_view sender)
{
  if (sender == "-")
    return blacklist::SenderIdentity::make(ip);
  return blacklist::SenderIdentity::make(ip, sender);
}

}  // namespace

std::string AdminResponse::render() const
{
  std::string out;
  for (auto const& l : lines) {
    out += l;
    out += '\n';
  }
  out += error ? "ERR " + *error + "\n" : std::string("OK\n");
  return out;
}

std::optional<AdminResponse> parse_admin_response(std::string_view buffer, std::size_t* consumed)
{
  AdminResponse r;
  std::size_t pos = 0;
  for (;;) {
    auto const eol = buffer.find('\n', pos);
    if (eol == std::string_view::npos)
      return std::nullopt;
    auto line = buffer.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line == "OK")
      break;
    if (line == "ERR" || line.starts_with("ERR ")) {
      r.error = std::string(line.size() > 4 ? line.substr(4) : std::string_view{});
      break;
    }
    r.lines.emplace_back(line);
  }
  if (consumed)
    *consumed = pos;
  return r;
}

AdminService::AdminService(blacklist::AblStore& store, Metrics const& metrics, Clock clock, SnapshotFn snapshot)
    : store_(store), metrics_(metrics), clock_(std::move(clock)), snapshot_(std::move(snapshot))
{
}

AdminResponse AdminService::handle(std::string_view line)
{
  auto const tokens = text::split_ws(text::trim(line));
  if (tokens.empty())
    return err("empty command");
  auto const verb = text::to_upper(tokens[0]);

  if (verb == "STATS" && tokens.size() == 1) {
    AdminResponse r;
    r.lines = metrics_.snapshot().to_lines();
    return r;
  }
  if (verb == "EXPIRE" && tokens.size() == 1) {
    AdminResponse r;
    r.lines.push_back(fmt::format("removed={}", store_.expire(clock_())));
    return r;
  }
  if (verb == "SNAPSHOT" && tokens.size() == 1) {
    std::string error;
    if (!snapshot_ || !snapshot_(error))
      return err(error.empty() ? "snapshots are not configured" : error);
    return {};
  }
  if (verb == "QUIT" && tokens.size() == 1) {
    AdminResponse r;
    r.close = true;
    return r;
  }
  if (verb == "BL" && tokens.size() >= 2) {
    auto const sub = text::to_upper(tokens[1]);
    if (sub == "LIST" && tokens.size() == 2) {
      AdminResponse r;
      for (auto const& e : store_.entries())
        r.lines.push_back(blacklist::format_entry(e));
      return r;
    }
    if (sub == "ADD" && tokens.size() >= 4) {
      auto const id = identity_from(tokens[2], tokens[3]);
      if (!id)
        return err("invalid identity");
      // The reason is everything after the sender field, spaces kept.
      auto const trimmed = text::trim(line);
      auto const reason_pos = static_cast<std::size_t>(tokens[3].data() + tokens[3].size() - trimmed.data());
      auto reason = std::string(text::trim(trimmed.substr(reason_pos)));
      if (reason.empty())
        reason = "manual";
      store_.record_spam(*id, reason, clock_());
      return {};
    }
    if (sub == "DEL" && tokens.size() == 4) {
      auto const id = identity_from(tokens[2], tokens[3]);
      if (!id)
        return err("invalid identity");
      if (!store_.remove(*id))
        return err("no such entry");
      return {};
    }
    return err("usage: BL LIST | BL ADD <ip> <sender-or--> [reason] | BL DEL <ip> <sender-or-->");
  }
  return err("unknown command: " + std::string(tokens[0]));
}


AdminResponse admin_request(net::Endpoint const& endpoint, std::string_view command,
                            std::chrono::milliseconds timeout)
{
  net::LineStream stream(net::connect_tcp(endpoint, std::nullopt, timeout), timeout);
  stream.write(std::string(command) + "\n");
  std::string buffer;
  for (;;) {
    buffer += stream.read_line();
    if (auto r = parse_admin_response(buffer))
      return *std::move(r);
  }
}

}  // namespace abl::mta
