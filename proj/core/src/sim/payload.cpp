#include "abl/sim/payload.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "abl/util/text.hpp"

namespace abl::sim {
namespace {

constexpr std::array<std::string_view, 32> kWords{
    "meeting", "report",  "schedule", "project", "budget",  "review", "draft",   "notes",
    "agenda",  "team",    "quarter",  "update",  "status",  "client", "invoice", "summary",
    "thanks",  "regards", "monday",   "friday",  "office",  "plan",   "result",  "data",
    "release", "build",   "test",     "design",  "minutes", "follow", "travel",  "hello"};

// Replaces the first character of every keyword match with a character no
// keyword contains, so a replacement can never create a new match.
void scrub(std::string& body, std::size_t from, std::vector<std::string> const& forbidden)
{
  char replacement = '#';
  for (char c : std::string_view("#%&*+=~^_")) {
    bool used = false;
    for (auto const& k : forbidden)
      used = used || k.find(c) != std::string::npos;
    if (!used) {
      replacement = c;
      break;
    }
  }
  auto const lower = [](std::string_view s) { return text::to_lower(s); };
  bool changed = true;
  while (changed) {
    changed = false;
    auto const hay = lower(body);
    for (auto const& k : forbidden) {
      if (k.empty())
        continue;
      auto const needle = lower(k);
      for (auto pos = hay.find(needle, from); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        if (body[pos] == '\r' || body[pos] == '\n')
          continue;
        body[pos] = replacement;
        changed = true;
      }
    }
  }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string make_payload(std::size_t octets, std::uint64_t seed, std::string_view trigger,
                         std::vector<std::string> const& forbidden)
{
  std::mt19937_64 rng(seed);
  auto const uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  std::string body;
  body.reserve(octets);
  std::size_t remaining = octets;
  bool first = true;

  while (remaining > 0) {
    std::size_t len;
    if (remaining <= 76) {
      len = remaining - 2;
    } else {
      len = uniform(0, 74);
      if (first && len < trigger.size())
        len = trigger.size();
      if (remaining - (len + 2) == 1)
        ++len;
      len = std::min(len, remaining - 2);
    }

    std::string line;
    if (first && !trigger.empty()) {
      line = std::string(trigger);
      if (line.size() < len)
        line += ' ';
    } else if (len > 0 && uniform(0, 7) == 0) {
      line = ".";
    }
    while (line.size() < len) {
      line += kWords[uniform(0, kWords.size() - 1)];
      line += ' ';
    }
    line.resize(len);
    body += line;
    body += "\r\n";
    remaining -= len + 2;
    first = false;
  }

  // The trigger line stays intact; a second trigger hit elsewhere is harmless
  // for spam but the scrub keeps legit bodies keyword-free.
  scrub(body, trigger.empty() ? 0 : trigger.size(), forbidden);
  return body;
}

std::string dot_stuff(std::string_view body)
{
  std::string out;
  out.reserve(body.size() + body.size() / 64 + 8);
  bool line_start = true;
  for (std::size_t i = 0; i < body.size(); ++i) {
    char const c = body[i];
    if (line_start && c == '.')
      out += '.';
    out += c;
    line_start = c == '\n' && i > 0 && body[i - 1] == '\r';
  }
  if (!body.empty() && !(body.size() >= 2 && body.substr(body.size() - 2) == "\r\n"))
    out += "\r\n";
  out += ".\r\n";
  return out;
}

}  // namespace abl::sim
