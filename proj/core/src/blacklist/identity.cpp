#include "abl/blacklist/identity.hpp"

#include <arpa/inet.h>

#include <cstring>
#include <stdexcept>

#include "abl/smtp/command.hpp"

namespace abl::blacklist {

std::optional<std::string> canonical_ip(std::string_view ip)
{
  if (ip.empty() || ip.size() >= INET6_ADDRSTRLEN)
    return std::nullopt;
  std::string const buf(ip);
  char out[INET6_ADDRSTRLEN] = {};

  in_addr v4{};
  if (inet_pton(AF_INET, buf.c_str(), &v4) == 1) {
    inet_ntop(AF_INET, &v4, out, sizeof out);
    return std::string(out);
  }
  in6_addr v6{};
  if (inet_pton(AF_INET6, buf.c_str(), &v6) == 1) {
    if (IN6_IS_ADDR_V4MAPPED(&v6)) {
      std::memcpy(&v4, &v6.s6_addr[12], 4);
      inet_ntop(AF_INET, &v4, out, sizeof out);
    } else {
      inet_ntop(AF_INET6, &v6, out, sizeof out);
    }
    return std::string(out);
  }
  return std::nullopt;
}

std::optional<std::string> normalize_sender(std::string_view sender)
{
  if (sender.size() >= 2 && sender.front() == '<' && sender.back() == '>')
    sender = sender.substr(1, sender.size() - 2);
  if (sender.empty())
    return std::string("<>");
  if (sender == "-")
    return std::nullopt;
  for (char c : sender) {
    auto const u = static_cast<unsigned char>(c);
    if (u <= 0x20 || u == 0x7f)
      return std::nullopt;
  }
  return smtp::lowercase_domain(sender);
}

std::optional<SenderIdentity> SenderIdentity::make(std::string_view ip,
                                                   std::optional<std::string_view> sender)
{
  auto cip = canonical_ip(ip);
  if (!cip)
    return std::nullopt;
  if (!sender)
    return SenderIdentity(std::move(*cip), std::nullopt);
  auto s = normalize_sender(*sender);
  if (!s)
    return std::nullopt;
  return SenderIdentity(std::move(*cip), std::move(*s));
}

SenderIdentity SenderIdentity::ip_only(std::string_view ip)
{
  auto id = make(ip);
  if (!id)
    throw std::invalid_argument("invalid IP address: " + std::string(ip));
  return *std::move(id);
}

std::string SenderIdentity::canonical() const
{
  return ip_ + '\t' + (sender_ ? *sender_ : std::string("-"));
}

}  // namespace abl::blacklist
