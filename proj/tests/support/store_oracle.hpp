#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abl/blacklist/entry.hpp"

namespace abl::testing {

// floor(b * (num/den)^(h-1)) capped at M, by direct integer search: the
// answer t is the largest t <= M with t * den^(h-1) <= b * num^(h-1).
// nullopt when the powers no longer fit in 128 bits.
inline std::optional<std::int64_t> oracle_ttl(std::int64_t b, std::uint64_t num, std::uint64_t den, std::int64_t m,
                                              std::uint64_t h)
{
  using u128 = unsigned __int128;
  u128 top = static_cast<u128>(b);
  u128 bottom = 1;
  u128 cap = static_cast<u128>(m);  // m * bottom
  for (std::uint64_t k = 1; k < h; ++k) {
    if (top >= cap)
      return m;
    if (__builtin_mul_overflow(top, static_cast<u128>(num), &top) ||
        __builtin_mul_overflow(bottom, static_cast<u128>(den), &bottom) ||
        __builtin_mul_overflow(cap, static_cast<u128>(den), &cap))
      return std::nullopt;
  }
  if (top >= cap)
    return m;
  std::int64_t lo = 0;
  std::int64_t hi = m;
  while (lo < hi) {
    auto const mid = lo + (hi - lo + 1) / 2;
    if (static_cast<u128>(mid) * bottom <= top)  // mid <= m, so no overflow
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

// Linear-scan model of the store, written from the lifecycle rules alone.
struct Model {
  struct Row {
    std::string ip;
    std::optional<std::string> sender;
    blacklist::Timestamp first_seen, last_hit, expiry;
    std::uint64_t hits;
  };
  blacklist::TtlPolicy policy;
  std::vector<Row> rows;

  Row* find_live(std::string const& ip, std::optional<std::string> const& sender, blacklist::Timestamp now)
  {
    for (auto& r : rows)
      if (r.ip == ip && r.sender == sender && r.expiry > now)
        return &r;
    return nullptr;
  }
  Row* match(std::string const& ip, std::optional<std::string> const& sender, blacklist::Timestamp now)
  {
    if (auto* r = find_live(ip, sender, now))
      return r;
    if (sender)
      return find_live(ip, std::nullopt, now);
    return nullptr;
  }
  void bump(Row& r, blacklist::Timestamp now)
  {
    ++r.hits;
    r.last_hit = std::max(r.last_hit, now);
    r.expiry = r.last_hit + oracle_ttl(policy.base_ttl, policy.growth.num, policy.growth.den, policy.max_ttl, r.hits).value();
  }
  void spam(std::string const& ip, std::optional<std::string> const& sender, blacklist::Timestamp now)
  {
    if (auto* r = find_live(ip, sender, now))
      return bump(*r, now);
    std::erase_if(rows, [&](Row const& r) { return r.ip == ip && r.sender == sender; });
    rows.push_back({ip, sender, now, now, now + oracle_ttl(policy.base_ttl, policy.growth.num, policy.growth.den,
                                                          policy.max_ttl, 1).value(),
                    1});
  }
  std::size_t expire(blacklist::Timestamp now)
  {
    return std::erase_if(rows, [&](Row const& r) { return r.expiry <= now; });
  }
};

}  // namespace abl::testing
