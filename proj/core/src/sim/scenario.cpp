#include "abl/sim/scenario.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "abl/util/kv_file.hpp"
#include "abl/util/text.hpp"

namespace abl::sim {
namespace {

std::size_t positive_size(KvEntry const& e)
{
  auto const v = text::parse_uint(e.value);
  if (!v || *v == 0)
    throw ScenarioError(fmt::format("line {}: {} must be a positive integer", e.line, e.key));
  return static_cast<std::size_t>(*v);
}

void apply_sender_key(SenderProfile& p, KvEntry const& e)
{
  if (e.key == "kind") {
    if (text::iequals(e.value, "spammer"))
      p.kind = SenderKind::Spammer;
    else if (text::iequals(e.value, "legit"))
      p.kind = SenderKind::Legit;
    else
      throw ScenarioError(fmt::format("line {}: kind must be spammer or legit", e.line));
  } else if (e.key == "count") {
    p.count = positive_size(e);
  } else if (e.key == "messages" || e.key == "messages_per_sender") {
    p.messages_per_sender = positive_size(e);
  } else if (e.key == "payload_octets") {
    p.payload_octets = positive_size(e);
  } else if (e.key == "retry_on_reject") {
    auto const b = text::parse_bool(e.value);
    if (!b)
      throw ScenarioError(fmt::format("line {}: retry_on_reject must be a boolean", e.line));
    p.retry_on_reject = *b;
  } else if (e.key == "inter_message_delay_ms") {
    auto const v = text::parse_uint(e.value);
    if (!v)
      throw ScenarioError(fmt::format("line {}: inter_message_delay_ms must be an integer", e.line));
    p.inter_message_delay = std::chrono::milliseconds(*v);
  } else if (e.key == "address_rotation") {
    if (text::iequals(e.value, "fixed"))
      p.address_rotation = AddressRotation::Fixed;
    else if (text::iequals(e.value, "per-message") || text::iequals(e.value, "per_message"))
      p.address_rotation = AddressRotation::PerMessage;
    else
      throw ScenarioError(fmt::format("line {}: address_rotation must be fixed or per-message", e.line));
  } else {
    throw ScenarioError(fmt::format("line {}: unknown sender key '{}'", e.line, e.key));
  }
}

}  // namespace

mta::ServerConfig ScenarioConfig::default_server()
{
  mta::ServerConfig c;
  c.keywords = {{"lottery", 5.0}};
  c.spam_threshold = 5.0;
  c.log_level = "warn";
  return c;
}

void ScenarioConfig::validate() const
{
  try {
    server.validate();
  } catch (mta::ConfigError const& e) {
    throw ScenarioError(e.what());
  }
  if (!(server.spam_threshold > 0))
    throw ScenarioError("spam_threshold must be > 0 so that legit payloads score below it");
  if (trigger_keyword.empty())
    throw ScenarioError("trigger_keyword must not be empty");
  bool trigger_detects = false;
  for (auto const& rule : server.keywords)
    if (text::iequals(rule.keyword, trigger_keyword) && rule.weight >= server.spam_threshold)
      trigger_detects = true;
  if (!trigger_detects)
    throw ScenarioError("trigger_keyword needs a keyword rule whose weight reaches spam_threshold");
  if (!server.hook_command.empty())
    throw ScenarioError("simulations use the keyword scorer; hook_command must be empty");

  for (auto const& p : senders) {
    // The name ends up in EHLO and the envelope sender.
    if (p.name.empty() || !std::all_of(p.name.begin(), p.name.end(), [](unsigned char c) {
          return std::isalnum(c) || c == '-';
        }))
      throw ScenarioError("sender names may only contain letters, digits and '-': " + p.name);
    if (p.count == 0 || p.messages_per_sender == 0)
      throw ScenarioError("sender." + p.name + ": count and messages must be >= 1");
    // Payloads end in CRLF so the DATA terminator adds no body octets.
    std::size_t const min_payload = p.kind == SenderKind::Spammer ? trigger_keyword.size() + 2 : 2;
    if (p.payload_octets < min_payload)
      throw ScenarioError(fmt::format("sender.{}: payload_octets must be >= {}", p.name, min_payload));
    if (p.payload_octets > server.max_message_octets)
      throw ScenarioError(fmt::format("sender.{}: payload exceeds max_message_octets", p.name));
  }
  std::size_t total = 0;
  for (auto const& p : senders)
    total += p.count;
  if (total > 250 * 250)
    throw ScenarioError("at most 62500 senders are supported");
}

ScenarioConfig parse_scenario(std::string_view text)
{
  ScenarioConfig sc;
  KvDocument doc;
  try {
    doc = parse_kv(text, true);
  } catch (KvError const& e) {
    throw ScenarioError(e.what());
  }

  for (auto const& e : doc.global) {
    if (e.key == "seed" || e.key == "rng_seed") {
      auto const v = text::parse_uint(e.value);
      if (!v)
        throw ScenarioError(fmt::format("line {}: seed must be an unsigned integer", e.line));
      sc.rng_seed = *v;
    } else if (e.key == "runs") {
      if (e.value == "abl_on")
        sc.runs = RunSelection::AblOn;
      else if (e.value == "abl_off")
        sc.runs = RunSelection::AblOff;
      else if (e.value == "both")
        sc.runs = RunSelection::Both;
      else
        throw ScenarioError(fmt::format("line {}: runs must be abl_on, abl_off or both", e.line));
    } else if (e.key == "trigger_keyword") {
      sc.trigger_keyword = e.value;
    } else {
      try {
        mta::apply_setting(sc.server, e.key, e.value);
      } catch (mta::ConfigError const& err) {
        throw ScenarioError(fmt::format("line {}: {}", e.line, err.what()));
      }
    }
  }

  for (auto const& section : doc.sections) {
    if (!section.name.starts_with("sender.") || section.name.size() == 7)
      throw ScenarioError(fmt::format("line {}: expected [sender.<name>]", section.line));
    SenderProfile p;
    p.name = section.name.substr(7);
    for (auto const& e : section.entries)
      apply_sender_key(p, e);
    sc.senders.push_back(std::move(p));
  }
  sc.validate();
  return sc;
}

ScenarioConfig read_scenario_file(std::filesystem::path const& path)
{
  std::string text;
  try {
    text = read_file(path);
  } catch (std::exception const& e) {
    throw ScenarioError(e.what());
  }
  return parse_scenario(text);
}

}  // namespace abl::sim
