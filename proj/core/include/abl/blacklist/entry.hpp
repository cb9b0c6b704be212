#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "abl/blacklist/identity.hpp"

namespace abl::blacklist {

using Timestamp = std::int64_t;  // whole seconds since the Unix epoch
using Seconds = std::int64_t;

// Exact rational growth factor num/den >= 1.
struct GrowthFactor {
  std::uint64_t num = 2;
  std::uint64_t den = 1;

  // "2", "1.5", "3/2". Throws std::invalid_argument on malformed input or a
  // value below 1.
  static GrowthFactor parse(std::string_view text);
  std::string to_string() const;
  bool operator==(GrowthFactor const&) const = default;
};

// ttl(h) = min(floor(base * growth^(h-1)), max), in whole seconds.
struct TtlPolicy {
  Seconds base_ttl = 3600;
  GrowthFactor growth{2, 1};
  Seconds max_ttl = 86400;

  bool valid() const noexcept;
  Seconds ttl(std::uint64_t hit_count) const;
  // Smallest h with ttl(h) == max_ttl; 0 when the cap is never reached (g = 1, b < M).
  std::uint64_t cap_hit_count() const;

  bool operator==(TtlPolicy const&) const = default;
};

struct AblEntry {
  SenderIdentity identity;
  Timestamp first_seen = 0;
  Timestamp last_hit = 0;
  std::uint64_t hit_count = 1;
  Timestamp expiry = 0;
  std::string reason;

  bool live_at(Timestamp now) const noexcept { return expiry > now; }
  bool operator==(AblEntry const&) const = default;
};

struct Clean {
  bool operator==(Clean const&) const = default;
};
struct Blacklisted {
  AblEntry entry;
  bool operator==(Blacklisted const&) const = default;
};

using AblVerdict = std::variant<Clean, Blacklisted>;

inline bool is_blacklisted(AblVerdict const& v) noexcept
{
  return std::holds_alternative<Blacklisted>(v);
}

}  // namespace abl::blacklist
