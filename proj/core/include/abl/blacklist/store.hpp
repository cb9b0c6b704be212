#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abl/blacklist/entry.hpp"

namespace abl::blacklist {

inline constexpr std::string_view kSnapshotHeader = "ABLv1";

class FormatError : public std::runtime_error {
public:
  FormatError(std::size_t line, std::string const& what);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class UnsupportedVersion : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// One write applied to the store, reported in the order writes were
// serialized. `identity` is what the caller passed; `entry` is the result.
struct JournalEvent {
  enum class Kind { Spam, Blocked };
  Kind kind;
  SenderIdentity identity;
  Timestamp now;
  std::string reason;
  AblEntry entry;
};

using Journal = std::function<void(JournalEvent const&)>;

// The active blacklist. Readers (check, entries, persist) share a lock;
// writers are serialized and update an entry as a unit, so a reader never
// sees a half-applied refresh.
//
// Entries die exactly at their expiry instant: check() treats expiry <= now
// as Clean and expire() removes them. Dead entries that have not been
// expired yet are ignored by every operation and replaced on re-insertion.
class AblStore {
public:
  static constexpr std::size_t kDefaultCapacity = 1'000'000;

  explicit AblStore(TtlPolicy policy = {}, std::size_t max_entries = kDefaultCapacity);
  AblStore(AblStore const&) = delete;
  AblStore& operator=(AblStore const&) = delete;

  TtlPolicy const& policy() const noexcept { return policy_; }
  std::size_t capacity() const noexcept { return max_entries_; }

  // Inserts a fresh entry (h = 1) or bumps the live one for `identity`.
  AblEntry record_spam(SenderIdentity const& identity, std::string_view reason, Timestamp now);

  // Full-identity match first, then the IP-only projection.
  AblVerdict check(SenderIdentity const& identity, Timestamp now) const;

  // Refreshes the entry check() would match. nullopt means no live entry
  // (it expired in between); callers treat that as Clean.
  std::optional<AblEntry> record_blocked_attempt(SenderIdentity const& identity, Timestamp now);

  std::size_t expire(Timestamp now);
  bool remove(SenderIdentity const& identity);

  std::optional<AblEntry> find(SenderIdentity const& identity) const;
  std::vector<AblEntry> entries() const;  // ordered by canonical identity
  std::size_t size() const;

  std::string persist() const;

  // Replaces the contents with the entries of `snapshot` that are live at
  // `now`. Throws FormatError / UnsupportedVersion and leaves the store
  // untouched on failure.
  void load(std::string_view snapshot, Timestamp now);

  void set_journal(Journal journal);

private:
  using Key = std::string;

  AblEntry const* live_entry(Key const& key, Timestamp now) const;
  AblEntry& refresh(AblEntry& entry, Timestamp now);
  void insert(AblEntry entry);
  void erase(std::map<Key, AblEntry>::iterator it);
  void reindex(AblEntry const& entry, Timestamp old_expiry);
  void notify(JournalEvent::Kind kind, SenderIdentity const& identity, Timestamp now,
              std::string_view reason, AblEntry const& entry) const;

  TtlPolicy policy_;
  std::uint64_t cap_hits_;
  std::size_t max_entries_;

  mutable std::shared_mutex mutex_;
  std::map<Key, AblEntry> entries_;
  std::set<std::pair<Timestamp, Key>> by_expiry_;
  Journal journal_;
};

// Snapshot record for one entry, without the trailing LF.
std::string format_entry(AblEntry const& entry);

// Parses a whole snapshot; entries with expiry <= now are dropped after
// validation.
std::vector<AblEntry> parse_snapshot(std::string_view snapshot, Timestamp now);

// Replaces tabs and line breaks so the text fits the final snapshot field.
std::string sanitize_reason(std::string_view reason);

}  // namespace abl::blacklist
