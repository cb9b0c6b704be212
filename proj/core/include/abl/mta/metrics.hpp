#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace abl::mta {

struct MetricsSnapshot {
  std::uint64_t connections_total = 0;
  std::uint64_t sessions_blocked_at_connect = 0;
  std::uint64_t sessions_blocked_at_mail = 0;
  std::uint64_t messages_accepted = 0;
  std::uint64_t messages_classified_spam = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t data_octets_received = 0;
  std::uint64_t blocked_attempts_refreshed = 0;

  // In STATS order.
  std::vector<std::pair<std::string_view, std::uint64_t>> fields() const;
  std::vector<std::string> to_lines() const;  // key=value
  static MetricsSnapshot from_lines(std::vector<std::string> const& lines);

  bool consistent() const noexcept
  {
    return sessions_blocked_at_connect + sessions_blocked_at_mail <= connections_total;
  }
  // Every counter of *this is >= the one in `earlier`.
  bool dominates(MetricsSnapshot const& earlier) const;

  bool operator==(MetricsSnapshot const&) const = default;
};

// Monotone counters shared by every session.
class Metrics {
public:
  using Counter = std::atomic<std::uint64_t>;

  Counter connections_total{0};
  Counter sessions_blocked_at_connect{0};
  Counter sessions_blocked_at_mail{0};
  Counter messages_accepted{0};
  Counter messages_classified_spam{0};
  Counter bytes_in{0};
  Counter bytes_out{0};
  Counter data_octets_received{0};
  Counter blocked_attempts_refreshed{0};

  // Blocked counters are read before connections_total, so a snapshot taken
  // during traffic still satisfies consistent().
  MetricsSnapshot snapshot() const;
};

}  // namespace abl::mta
