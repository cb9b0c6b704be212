#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace abl::smtp {

inline constexpr std::size_t kMaxCommandLine = 512;  // octets, CRLF included

struct Helo {
  std::string domain;
  bool operator==(Helo const&) const = default;
};

struct Ehlo {
  std::string domain;
  bool operator==(Ehlo const&) const = default;
};

// An empty reverse_path is the null sender `<>`.
struct MailFrom {
  std::string reverse_path;
  std::size_t raw_line_length = 0;
  std::optional<std::uint64_t> declared_size;  // ESMTP SIZE= parameter
  bool operator==(MailFrom const&) const = default;
};

struct RcptTo {
  std::string forward_path;
  bool operator==(RcptTo const&) const = default;
};

struct Data {
  bool operator==(Data const&) const = default;
};
struct Rset {
  bool operator==(Rset const&) const = default;
};
struct Noop {
  bool operator==(Noop const&) const = default;
};
struct Quit {
  bool operator==(Quit const&) const = default;
};

// Verb kept exactly as received.
struct Unknown {
  std::string verb;
  bool operator==(Unknown const&) const = default;
};

using Command = std::variant<Helo, Ehlo, MailFrom, RcptTo, Data, Rset, Noop, Quit, Unknown>;

enum class CommandKind { Helo, Ehlo, MailFrom, RcptTo, Data, Rset, Noop, Quit, Unknown };

CommandKind kind_of(Command const& cmd) noexcept;
std::string_view to_string(CommandKind kind) noexcept;

struct ParseError {
  enum class Kind { LineTooLong, BadSyntax, MissingCrlf };
  Kind kind;
  std::string message;
};

using ParseResult = std::variant<Command, ParseError>;

// `line` must end in CRLF and be at most kMaxCommandLine octets long.
ParseResult parse_command(std::string_view line);

// Strips the brackets off `<local@Domain>` and lowercases the domain part.
// Returns nullopt for text that is not a bracketed path.
std::optional<std::string> normalize_path(std::string_view bracketed);

// Lowercases everything after the last '@'.
std::string lowercase_domain(std::string_view mailbox);

// Verbs answered with 502 rather than 500.
bool is_unimplemented_verb(std::string_view verb) noexcept;

}  // namespace abl::smtp
