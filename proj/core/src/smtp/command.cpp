#include "abl/smtp/command.hpp"

#include <array>

#include "abl/util/text.hpp"

namespace abl::smtp {
namespace {

ParseError bad_syntax(std::string message)
{
  return {ParseError::Kind::BadSyntax, std::move(message)};
}

bool is_path_char(char c) noexcept
{
  auto const u = static_cast<unsigned char>(c);
  return u > 0x20 && u < 0x7f && c != '<' && c != '>';
}

// local@domain with both parts non-empty; no whitespace or brackets.
bool is_mailbox(std::string_view s) noexcept
{
  auto const at = s.rfind('@');
  if (at == std::string_view::npos || at == 0 || at + 1 == s.size())
    return false;
  for (char c : s)
    if (!is_path_char(c))
      return false;
  return true;
}

std::string_view skip_spaces(std::string_view s) noexcept
{
  while (!s.empty() && s.front() == ' ')
    s.remove_prefix(1);
  return s;
}

struct PathArgument {
  std::string path;                     // brackets stripped, domain lowercased
  std::vector<std::string_view> params; // ESMTP parameters after '>'
};

// Parses `<keyword>:<path> [params]` where `rest` follows the verb.
std::variant<PathArgument, ParseError> parse_path_argument(std::string_view rest,
                                                           std::string_view keyword)
{
  rest = skip_spaces(rest);
  if (!text::istarts_with(rest, keyword))
    return bad_syntax("expected " + std::string(keyword));
  rest.remove_prefix(keyword.size());
  rest = skip_spaces(rest);
  if (rest.empty() || rest.front() != '<')
    return bad_syntax("expected '<'");
  auto const close = rest.find('>');
  if (close == std::string_view::npos)
    return bad_syntax("unterminated path");

  auto path = normalize_path(rest.substr(0, close + 1));
  if (!path)
    return bad_syntax("malformed path");

  auto const tail = rest.substr(close + 1);
  if (!tail.empty() && tail.front() != ' ')
    return bad_syntax("garbage after path");
  return PathArgument{std::move(*path), text::split_ws(tail)};
}

ParseResult parse_mail(std::string_view rest, std::size_t raw_length)
{
  auto arg = parse_path_argument(rest, "FROM:");
  if (auto const* err = std::get_if<ParseError>(&arg))
    return *err;
  auto& pa = std::get<PathArgument>(arg);
  if (!pa.path.empty() && !is_mailbox(pa.path))
    return bad_syntax("malformed reverse-path");

  MailFrom cmd{std::move(pa.path), raw_length, std::nullopt};
  for (auto const param : pa.params) {
    if (text::istarts_with(param, "SIZE=")) {
      auto const size = text::parse_uint(param.substr(5));
      if (!size)
        return bad_syntax("malformed SIZE parameter");
      cmd.declared_size = *size;
    }
  }
  return Command{std::move(cmd)};
}

ParseResult parse_rcpt(std::string_view rest)
{
  auto arg = parse_path_argument(rest, "TO:");
  if (auto const* err = std::get_if<ParseError>(&arg))
    return *err;
  auto& pa = std::get<PathArgument>(arg);
  if (!is_mailbox(pa.path) && !text::iequals(pa.path, "postmaster"))
    return bad_syntax("malformed forward-path");
  return Command{RcptTo{std::move(pa.path)}};
}

std::variant<std::string, ParseError> parse_domain_argument(std::string_view rest)
{
  auto const tokens = text::split_ws(rest);
  if (tokens.size() != 1)
    return bad_syntax("expected exactly one domain argument");
  for (char c : tokens.front())
    if (!is_path_char(c))
      return bad_syntax("invalid character in domain");
  return text::to_lower(tokens.front());
}

}  // namespace

CommandKind kind_of(Command const& cmd) noexcept
{
  return static_cast<CommandKind>(cmd.index());
}

std::string_view to_string(CommandKind kind) noexcept
{
  static constexpr std::array<std::string_view, 9> names{
      "HELO", "EHLO", "MAIL", "RCPT", "DATA", "RSET", "NOOP", "QUIT", "UNKNOWN"};
  return names[static_cast<std::size_t>(kind)];
}

bool is_unimplemented_verb(std::string_view verb) noexcept
{
  for (auto const v : {"VRFY", "EXPN", "AUTH", "STARTTLS", "HELP", "TURN", "BDAT"})
    if (text::iequals(verb, v))
      return true;
  return false;
}

std::string lowercase_domain(std::string_view mailbox)
{
  std::string out(mailbox);
  auto const at = out.rfind('@');
  if (at != std::string::npos)
    for (auto i = at + 1; i < out.size(); ++i)
      out[i] = text::ascii_lower(out[i]);
  return out;
}

std::optional<std::string> normalize_path(std::string_view bracketed)
{
  if (bracketed.size() < 2 || bracketed.front() != '<' || bracketed.back() != '>')
    return std::nullopt;
  auto inner = bracketed.substr(1, bracketed.size() - 2);
  // Source routes (`@a,@b:user@host`) are accepted and discarded.
  if (!inner.empty() && inner.front() == '@') {
    auto const colon = inner.find(':');
    if (colon == std::string_view::npos)
      return std::nullopt;
    inner.remove_prefix(colon + 1);
  }
  for (char c : inner)
    if (!is_path_char(c))
      return std::nullopt;
  return lowercase_domain(inner);
}

ParseResult parse_command(std::string_view line)
{
  if (line.size() > kMaxCommandLine)
    return ParseError{ParseError::Kind::LineTooLong, "line too long"};
  if (line.size() < 2 || line.substr(line.size() - 2) != "\r\n")
    return ParseError{ParseError::Kind::MissingCrlf, "line must end with CRLF"};

  auto const content = line.substr(0, line.size() - 2);
  if (content.find_first_of("\r\n") != std::string_view::npos)
    return bad_syntax("bare CR or LF in command line");

  auto const sp = content.find(' ');
  auto const verb = content.substr(0, sp);
  auto const rest = sp == std::string_view::npos ? std::string_view{} : content.substr(sp + 1);

  auto const no_argument = [&](Command cmd) -> ParseResult {
    if (!text::trim(rest).empty())
      return bad_syntax(std::string(verb) + " takes no argument");
    return cmd;
  };

  if (text::iequals(verb, "HELO") || text::iequals(verb, "EHLO")) {
    auto dom = parse_domain_argument(rest);
    if (auto const* err = std::get_if<ParseError>(&dom))
      return *err;
    auto& d = std::get<std::string>(dom);
    if (text::iequals(verb, "HELO"))
      return Command{Helo{std::move(d)}};
    return Command{Ehlo{std::move(d)}};
  }
  if (text::iequals(verb, "MAIL"))
    return parse_mail(rest, line.size());
  if (text::iequals(verb, "RCPT"))
    return parse_rcpt(rest);
  if (text::iequals(verb, "DATA"))
    return no_argument(Data{});
  if (text::iequals(verb, "RSET"))
    return no_argument(Rset{});
  if (text::iequals(verb, "QUIT"))
    return no_argument(Quit{});
  if (text::iequals(verb, "NOOP"))
    return Command{Noop{}};
  return Command{Unknown{std::string(verb)}};
}

}  // namespace abl::smtp
