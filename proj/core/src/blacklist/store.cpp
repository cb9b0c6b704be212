#include "abl/blacklist/store.hpp"

#include <algorithm>
#include <mutex>

#include <fmt/format.h>

#include "abl/util/text.hpp"

namespace abl::blacklist {

FormatError::FormatError(std::size_t line, std::string const& what)
    : std::runtime_error(fmt::format("snapshot line {}: {}", line, what)), line_(line)
{
}

std::string sanitize_reason(std::string_view reason)
{
  std::string out(reason);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\r' || c == '\n'; }, ' ');
  return out;
}

AblStore::AblStore(TtlPolicy policy, std::size_t max_entries)
    : policy_(policy), cap_hits_(0), max_entries_(std::max<std::size_t>(max_entries, 1))
{
  if (!policy_.valid())
    throw std::invalid_argument("invalid TTL policy");
  cap_hits_ = policy_.cap_hit_count();
}

void AblStore::set_journal(Journal journal)
{
  std::unique_lock lock(mutex_);
  journal_ = std::move(journal);
}

AblEntry const* AblStore::live_entry(Key const& key, Timestamp now) const
{
  auto const it = entries_.find(key);
  if (it == entries_.end() || !it->second.live_at(now))
    return nullptr;
  return &it->second;
}

void AblStore::reindex(AblEntry const& entry, Timestamp old_expiry)
{
  auto const key = entry.identity.canonical();
  by_expiry_.erase({old_expiry, key});
  by_expiry_.emplace(entry.expiry, key);
}

AblEntry& AblStore::refresh(AblEntry& entry, Timestamp now)
{
  auto const old_expiry = entry.expiry;
  entry.hit_count += 1;
  entry.last_hit = std::max(entry.last_hit, now);
  auto const ttl = (cap_hits_ != 0 && entry.hit_count >= cap_hits_) ? policy_.max_ttl
                                                                     : policy_.ttl(entry.hit_count);
  entry.expiry = entry.last_hit + ttl;
  reindex(entry, old_expiry);
  return entry;
}

void AblStore::erase(std::map<Key, AblEntry>::iterator it)
{
  by_expiry_.erase({it->second.expiry, it->first});
  entries_.erase(it);
}

void AblStore::insert(AblEntry entry)
{
  auto key = entry.identity.canonical();
  if (auto it = entries_.find(key); it != entries_.end())
    erase(it);
  while (entries_.size() >= max_entries_ && !by_expiry_.empty())
    erase(entries_.find(by_expiry_.begin()->second));
  by_expiry_.emplace(entry.expiry, key);
  entries_.emplace(std::move(key), std::move(entry));
}

void AblStore::notify(JournalEvent::Kind kind, SenderIdentity const& identity, Timestamp now,
                      std::string_view reason, AblEntry const& entry) const
{
  if (journal_)
    journal_(JournalEvent{kind, identity, now, std::string(reason), entry});
}

AblEntry AblStore::record_spam(SenderIdentity const& identity, std::string_view reason,
                               Timestamp now)
{
  auto const clean_reason = sanitize_reason(reason);
  auto const key = identity.canonical();
  std::unique_lock lock(mutex_);

  if (auto it = entries_.find(key); it != entries_.end() && it->second.live_at(now)) {
    auto& entry = refresh(it->second, now);
    entry.reason = clean_reason;
    notify(JournalEvent::Kind::Spam, identity, now, clean_reason, entry);
    return entry;
  }

  AblEntry entry{identity, now, now, 1, now + policy_.ttl(1), clean_reason};
  insert(entry);
  notify(JournalEvent::Kind::Spam, identity, now, clean_reason, entry);
  return entry;
}

AblVerdict AblStore::check(SenderIdentity const& identity, Timestamp now) const
{
  std::shared_lock lock(mutex_);
  if (auto const* e = live_entry(identity.canonical(), now))
    return Blacklisted{*e};
  if (!identity.is_ip_only())
    if (auto const* e = live_entry(identity.ip_projection().canonical(), now))
      return Blacklisted{*e};
  return Clean{};
}

std::optional<AblEntry> AblStore::record_blocked_attempt(SenderIdentity const& identity,
                                                         Timestamp now)
{
  std::unique_lock lock(mutex_);
  auto match = entries_.find(identity.canonical());
  if (match == entries_.end() || !match->second.live_at(now)) {
    match = entries_.end();
    if (!identity.is_ip_only()) {
      auto it = entries_.find(identity.ip_projection().canonical());
      if (it != entries_.end() && it->second.live_at(now))
        match = it;
    }
  }
  if (match == entries_.end())
    return std::nullopt;

  auto& entry = refresh(match->second, now);
  notify(JournalEvent::Kind::Blocked, identity, now, {}, entry);
  return entry;
}

std::size_t AblStore::expire(Timestamp now)
{
  std::unique_lock lock(mutex_);
  std::size_t removed = 0;
  while (!by_expiry_.empty() && by_expiry_.begin()->first <= now) {
    erase(entries_.find(by_expiry_.begin()->second));
    ++removed;
  }
  return removed;
}

bool AblStore::remove(SenderIdentity const& identity)
{
  std::unique_lock lock(mutex_);
  auto it = entries_.find(identity.canonical());
  if (it == entries_.end())
    return false;
  erase(it);
  return true;
}

std::optional<AblEntry> AblStore::find(SenderIdentity const& identity) const
{
  std::shared_lock lock(mutex_);
  auto it = entries_.find(identity.canonical());
  if (it == entries_.end())
    return std::nullopt;
  return it->second;
}

std::vector<AblEntry> AblStore::entries() const
{
  std::shared_lock lock(mutex_);
  std::vector<AblEntry> out;
  out.reserve(entries_.size());
  for (auto const& [key, entry] : entries_)
    out.push_back(entry);
  return out;
}

std::size_t AblStore::size() const
{
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::string format_entry(AblEntry const& e)
{
  return fmt::format("{}\t{}\t{}\t{}\t{}\t{}", e.identity.canonical(), e.first_seen, e.last_hit,
                     e.hit_count, e.expiry, e.reason);
}

std::string AblStore::persist() const
{
  std::shared_lock lock(mutex_);
  std::string out(kSnapshotHeader);
  out += '\n';
  for (auto const& [key, entry] : entries_) {
    out += format_entry(entry);
    out += '\n';
  }
  return out;
}

namespace {

AblEntry parse_record(std::string_view line, std::size_t lineno)
{
  auto const fields = text::split(line, '\t');
  if (fields.size() != 7)
    throw FormatError(lineno, fmt::format("expected 7 tab-separated fields, got {}", fields.size()));

  std::optional<std::string_view> sender;
  if (fields[1] != "-")
    sender = fields[1];
  auto identity = SenderIdentity::make(fields[0], sender);
  if (!identity)
    throw FormatError(lineno, "invalid identity");

  auto const first_seen = text::parse_int(fields[2]);
  auto const last_hit = text::parse_int(fields[3]);
  auto const hits = text::parse_uint(fields[4]);
  auto const expiry = text::parse_int(fields[5]);
  if (!first_seen || !last_hit || !hits || !expiry)
    throw FormatError(lineno, "malformed number");
  if (*hits < 1)
    throw FormatError(lineno, "hit_count must be >= 1");
  if (*first_seen > *last_hit || *last_hit >= *expiry)
    throw FormatError(lineno, "timestamps must satisfy first_seen <= last_hit < expiry");

  return AblEntry{*std::move(identity), *first_seen, *last_hit, *hits, *expiry, std::string(fields[6])};
}

}  // namespace

std::vector<AblEntry> parse_snapshot(std::string_view snapshot, Timestamp now)
{
  auto lines = text::split(snapshot, '\n');
  // A trailing LF leaves one empty element behind.
  if (!lines.empty() && lines.back().empty())
    lines.pop_back();
  if (lines.empty())
    throw FormatError(1, "missing header");
  if (lines.front() != kSnapshotHeader) {
    if (text::istarts_with(lines.front(), "ABLv"))
      throw UnsupportedVersion("unsupported snapshot version: " + std::string(lines.front()));
    throw FormatError(1, "missing ABLv1 header");
  }

  std::vector<AblEntry> out;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto entry = parse_record(lines[i], i + 1);
    if (!seen.insert(entry.identity.canonical()).second)
      throw FormatError(i + 1, "duplicate identity");
    if (entry.live_at(now))
      out.push_back(std::move(entry));
  }
  return out;
}

void AblStore::load(std::string_view snapshot, Timestamp now)
{
  auto parsed = parse_snapshot(snapshot, now);
  std::unique_lock lock(mutex_);
  entries_.clear();
  by_expiry_.clear();
  for (auto& e : parsed)
    insert(std::move(e));
}

}  // namespace abl::blacklist
