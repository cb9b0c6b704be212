#include "abl/mta/config.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "abl/util/kv_file.hpp"
#include "abl/util/text.hpp"

namespace abl::mta {
namespace {

template <typename T>
T require(std::optional<T> v, std::string_view key, std::string_view value)
{
  if (!v)
    throw ConfigError(fmt::format("invalid value for {}: '{}'", key, value));
  return *v;
}

std::uint64_t positive(std::string_view key, std::string_view value)
{
  auto const v = require(text::parse_uint(value), key, value);
  if (v == 0)
    throw ConfigError(fmt::format("{} must be positive", key));
  return v;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

struct Field {
  std::function<void(ServerConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(ServerConfig const&)> get;
};

std::map<std::string, Field, std::less<>> const& fields()
{
  static std::map<std::string, Field, std::less<>> const table = [] {
    std::map<std::string, Field, std::less<>> t;
    t["listen_address"] = {[](auto& c, auto, auto v) { c.listen_address = std::string(v); },
                           [](auto const& c) { return c.listen_address; }};
    t["greeting_domain"] = {[](auto& c, auto k, auto v) {
                              if (v.empty() || v.find_first_of(" \t") != std::string_view::npos)
                                throw ConfigError(fmt::format("invalid value for {}: '{}'", k, v));
                              c.greeting_domain = std::string(v);
                            },
                            [](auto const& c) { return c.greeting_domain; }};
    t["policy"] = {[](auto& c, auto k, auto v) {
                     auto p = require(smtp::parse_reject_policy(v), k, v);
                     if (p.mode == smtp::RejectPolicy::Mode::Tarpit && v.find(':') == std::string_view::npos)
                       p.tarpit_delay = c.policy.tarpit_delay;
                     c.policy = p;
                   },
                   [](auto const& c) {
                     auto s = smtp::to_string(c.policy);
                     return s.substr(0, s.find(':'));
                   }};
    t["tarpit_delay_ms"] = {[](auto& c, auto k, auto v) {
                              c.policy.tarpit_delay = std::chrono::milliseconds(positive(k, v));
                            },
                            [](auto const& c) { return std::to_string(c.policy.tarpit_delay.count()); }};
    t["base_ttl_s"] = {[](auto& c, auto k, auto v) {
                         c.ttl_policy.base_ttl = static_cast<blacklist::Seconds>(positive(k, v));
                       },
                       [](auto const& c) { return std::to_string(c.ttl_policy.base_ttl); }};
    t["growth_factor"] = {[](auto& c, auto k, auto v) {
                            try {
                              c.ttl_policy.growth = blacklist::GrowthFactor::parse(v);
                            } catch (std::invalid_argument const&) {
                              throw ConfigError(fmt::format("invalid value for {}: '{}'", k, v));
                            }
                          },
                          [](auto const& c) { return c.ttl_policy.growth.to_string(); }};
    t["max_ttl_s"] = {[](auto& c, auto k, auto v) {
                        c.ttl_policy.max_ttl = static_cast<blacklist::Seconds>(positive(k, v));
                      },
                      [](auto const& c) { return std::to_string(c.ttl_policy.max_ttl); }};
    t["max_entries"] = {[](auto& c, auto k, auto v) { c.max_entries = positive(k, v); },
                        [](auto const& c) { return std::to_string(c.max_entries); }};
    t["keywords"] = {[](auto& c, auto k, auto v) {
                       try {
                         c.keywords = classify::parse_keywords(v);
                       } catch (std::invalid_argument const& e) {
                         throw ConfigError(fmt::format("invalid value for {}: {}", k, e.what()));
                       }
                     },
                     [](auto const& c) { return classify::format_keywords(c.keywords); }};
    t["spam_threshold"] = {[](auto& c, auto k, auto v) {
                             auto const d = require(text::parse_double(v), k, v);
                             if (d < 0)
                               throw ConfigError(fmt::format("{} must be >= 0", k));
                             c.spam_threshold = d;
                           },
                           [](auto const& c) { return fmt_double(c.spam_threshold); }};
    t["hook_command"] = {[](auto& c, auto, auto v) { c.hook_command = std::string(v); },
                         [](auto const& c) { return c.hook_command; }};
    t["hook_timeout_ms"] = {[](auto& c, auto k, auto v) {
                              c.hook_timeout = std::chrono::milliseconds(positive(k, v));
                            },
                            [](auto const& c) { return std::to_string(c.hook_timeout.count()); }};
    t["max_message_octets"] = {[](auto& c, auto k, auto v) { c.max_message_octets = positive(k, v); },
                               [](auto const& c) { return std::to_string(c.max_message_octets); }};
    t["command_timeout_s"] = {[](auto& c, auto k, auto v) {
                                c.command_timeout = std::chrono::seconds(positive(k, v));
                              },
                              [](auto const& c) { return std::to_string(c.command_timeout.count()); }};
    t["max_concurrent_sessions"] = {[](auto& c, auto k, auto v) { c.max_concurrent_sessions = positive(k, v); },
                                    [](auto const& c) { return std::to_string(c.max_concurrent_sessions); }};
    t["snapshot_path"] = {[](auto& c, auto, auto v) { c.snapshot_path = std::string(v); },
                          [](auto const& c) { return c.snapshot_path; }};
    t["snapshot_interval_s"] = {[](auto& c, auto k, auto v) {
                                  c.snapshot_interval = std::chrono::seconds(positive(k, v));
                                },
                                [](auto const& c) { return std::to_string(c.snapshot_interval.count()); }};
    t["admin_listen_address"] = {[](auto& c, auto, auto v) { c.admin_listen_address = std::string(v); },
                                 [](auto const& c) { return c.admin_listen_address; }};
    t["abl_enabled"] = {[](auto& c, auto k, auto v) { c.abl_enabled = require(text::parse_bool(v), k, v); },
                        [](auto const& c) { return std::string(c.abl_enabled ? "true" : "false"); }};
    t["reject_triggering_message"] = {
        [](auto& c, auto k, auto v) { c.reject_triggering_message = require(text::parse_bool(v), k, v); },
        [](auto const& c) { return std::string(c.reject_triggering_message ? "true" : "false"); }};
    t["shutdown_grace_s"] = {[](auto& c, auto k, auto v) {
                               c.shutdown_grace = std::chrono::seconds(positive(k, v));
                             },
                             [](auto const& c) { return std::to_string(c.shutdown_grace.count()); }};
    t["reject_linger_ms"] = {[](auto& c, auto k, auto v) {
                               c.reject_linger = std::chrono::milliseconds(positive(k, v));
                             },
                             [](auto const& c) { return std::to_string(c.reject_linger.count()); }};
    t["log_level"] = {[](auto& c, auto k, auto v) {
                        static constexpr std::string_view levels[] = {"trace", "debug", "info", "warn",
                                                                      "error", "critical", "off"};
                        if (std::find(std::begin(levels), std::end(levels), v) == std::end(levels))
                          throw ConfigError(fmt::format("invalid value for {}: '{}'", k, v));
                        c.log_level = std::string(v);
                      },
                      [](auto const& c) { return c.log_level; }};
    return t;
  }();
  return table;
}

}  // namespace

void ServerConfig::validate() const
{
  if (!ttl_policy.valid())
    throw ConfigError("TTL policy needs base_ttl_s >= 1 and max_ttl_s >= base_ttl_s");
  if (command_timeout.count() <= 0 || snapshot_interval.count() <= 0 || shutdown_grace.count() <= 0 ||
      reject_linger.count() <= 0 || policy.tarpit_delay.count() <= 0 || hook_timeout.count() <= 0)
    throw ConfigError("all durations must be positive");
  if (max_concurrent_sessions == 0 || max_message_octets == 0 || max_entries == 0)
    throw ConfigError("limits must be positive");
}

classify::ClassifierConfig ServerConfig::classifier_config() const
{
  classify::ClassifierConfig cc{keywords, spam_threshold, std::nullopt};
  if (!hook_command.empty())
    cc.hook = classify::HookSpec{hook_command, hook_timeout};
  return cc;
}

std::vector<std::string_view> const& config_keys()
{
  static std::vector<std::string_view> const keys = [] {
    std::vector<std::string_view> k;
    for (auto const& [name, field] : fields())
      k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_setting(ServerConfig& config, std::string_view key, std::string_view value)
{
  auto const it = fields().find(key);
  if (it == fields().end())
    throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  it->second.set(config, key, text::trim(value));
}

std::string get_setting(ServerConfig const& config, std::string_view key)
{
  auto const it = fields().find(key);
  if (it == fields().end())
    throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  return it->second.get(config);
}

ServerConfig resolve_config(Settings const& file, Settings const& flags)
{
  ServerConfig config;
  for (auto const& [k, v] : file)
    apply_setting(config, k, v);
  for (auto const& [k, v] : flags)
    apply_setting(config, k, v);
  config.validate();
  return config;
}

Settings parse_settings(std::string_view text)
{
  Settings out;
  try {
    auto const doc = parse_kv(text, false);
    for (auto const& e : doc.global) {
      if (fields().find(e.key) == fields().end())
        throw ConfigError(fmt::format("line {}: unknown configuration key '{}'", e.line, e.key));
      out.emplace_back(e.key, e.value);
    }
  } catch (KvError const& e) {
    throw ConfigError(e.what());
  }
  return out;
}

Settings read_settings_file(std::filesystem::path const& path)
{
  std::string text;
  try {
    text = read_file(path);
  } catch (std::exception const& e) {
    throw ConfigError(e.what());
  }
  return parse_settings(text);
}

}  // namespace abl::mta
