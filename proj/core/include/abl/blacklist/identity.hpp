#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace abl::blacklist {

// Canonical textual IP (inet_ntop form; IPv4-mapped IPv6 collapses to IPv4).
std::optional<std::string> canonical_ip(std::string_view ip);

// The blacklist key: client IP plus, optionally, the envelope sender.
// Construction normalizes; two identities are equal iff their canonical
// forms are octet-equal. The null sender is stored as "<>".
class SenderIdentity {
public:
  static std::optional<SenderIdentity> make(std::string_view ip,
                                            std::optional<std::string_view> sender = std::nullopt);
  static SenderIdentity ip_only(std::string_view ip);  // throws std::invalid_argument

  std::string const& ip() const noexcept { return ip_; }
  std::optional<std::string> const& sender() const noexcept { return sender_; }
  bool is_ip_only() const noexcept { return !sender_.has_value(); }

  SenderIdentity ip_projection() const { return SenderIdentity(ip_, std::nullopt); }

  // "ip<TAB>sender" or "ip<TAB>-".
  std::string canonical() const;

  auto operator<=>(SenderIdentity const&) const = default;

private:
  SenderIdentity(std::string ip, std::optional<std::string> sender)
      : ip_(std::move(ip)), sender_(std::move(sender))
  {
  }

  std::string ip_;
  std::optional<std::string> sender_;
};

// Strips one pair of surrounding brackets and lowercases the domain part;
// empty input (the null sender) becomes "<>". Returns nullopt for text that
// cannot be a key: whitespace, control characters, or the reserved "-".
std::optional<std::string> normalize_sender(std::string_view sender);

}  // namespace abl::blacklist
