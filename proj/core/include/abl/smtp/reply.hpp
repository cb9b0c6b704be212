#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace abl::smtp {

struct Reply {
  int code = 250;
  std::optional<std::string> enhanced_status;  // "x.y.z", repeated on every line
  std::vector<std::string> lines{"OK"};

  bool operator==(Reply const&) const = default;

  // Code in 200..599, at least one line, no CR/LF in any line, and an
  // enhanced status (when present) whose class digit matches the code.
  // Lines of a reply without an enhanced status must not themselves start
  // with something that reads as one, or the wire form would be ambiguous.
  bool valid() const;

  int code_class() const noexcept { return code / 100; }
  bool positive() const noexcept { return code_class() == 2 || code_class() == 3; }
};

Reply make_reply(int code, std::string_view text);
Reply make_reply(int code, std::string_view enhanced, std::string_view text);

std::string render_reply(Reply const& reply);

bool is_enhanced_status(std::string_view s) noexcept;

// Parses one complete (possibly multiline) reply in wire form, CRLF-terminated.
std::optional<Reply> parse_reply(std::string_view wire);

// Byte count of the first complete reply at the head of `buffer`, or 0 when
// the buffer does not hold one yet.
std::size_t complete_reply_length(std::string_view buffer) noexcept;

}  // namespace abl::smtp
