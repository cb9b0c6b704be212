#include "abl/smtp/reply.hpp"

#include "abl/util/text.hpp"

namespace abl::smtp {
namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

bool leading_enhanced_status(std::string_view line) noexcept
{
  auto const sp = line.find(' ');
  return is_enhanced_status(line.substr(0, sp));
}

}  // namespace

bool is_enhanced_status(std::string_view s) noexcept
{
  // class "." subject "." detail, class in {2,4,5}, 1-3 digits each after.
  auto const parts = text::split(s, '.');
  if (parts.size() != 3)
    return false;
  if (parts[0].size() != 1 || (parts[0][0] != '2' && parts[0][0] != '4' && parts[0][0] != '5'))
    return false;
  for (std::size_t i = 1; i < 3; ++i) {
    if (parts[i].empty() || parts[i].size() > 3)
      return false;
    for (char c : parts[i])
      if (!is_digit(c))
        return false;
  }
  return true;
}

bool Reply::valid() const
{
  if (code < 200 || code > 599 || lines.empty())
    return false;
  if (enhanced_status &&
      (!is_enhanced_status(*enhanced_status) || (*enhanced_status)[0] - '0' != code / 100))
    return false;
  for (auto const& l : lines) {
    if (l.find_first_of("\r\n") != std::string::npos)
      return false;
    if (!enhanced_status && leading_enhanced_status(l))
      return false;
  }
  return true;
}

Reply make_reply(int code, std::string_view text)
{
  return Reply{code, std::nullopt, {std::string(text)}};
}

Reply make_reply(int code, std::string_view enhanced, std::string_view text)
{
  return Reply{code, std::string(enhanced), {std::string(text)}};
}

std::string render_reply(Reply const& reply)
{
  std::string out;
  auto const code = std::to_string(reply.code);
  for (std::size_t i = 0; i < reply.lines.size(); ++i) {
    out += code;
    out += (i + 1 < reply.lines.size()) ? '-' : ' ';
    if (reply.enhanced_status) {
      out += *reply.enhanced_status;
      out += ' ';
    }
    out += reply.lines[i];
    out += "\r\n";
  }
  return out;
}

std::optional<Reply> parse_reply(std::string_view wire)
{
  Reply reply;
  reply.lines.clear();
  std::optional<std::string> enhanced;
  bool first = true;
  bool all_enhanced = true;
  std::vector<std::string> raw_texts;

  while (!wire.empty()) {
    auto const eol = wire.find("\r\n");
    if (eol == std::string_view::npos)
      return std::nullopt;
    auto const line = wire.substr(0, eol);
    wire.remove_prefix(eol + 2);

    if (line.size() < 3 || !is_digit(line[0]) || !is_digit(line[1]) || !is_digit(line[2]))
      return std::nullopt;
    int const code = (line[0] - '0') * 100 + (line[1] - '0') * 10 + (line[2] - '0');
    if (first)
      reply.code = code;
    else if (code != reply.code)
      return std::nullopt;
    first = false;

    bool last = true;
    std::string_view text;
    if (line.size() > 3) {
      if (line[3] == '-')
        last = false;
      else if (line[3] != ' ')
        return std::nullopt;
      text = line.substr(4);
    }
    raw_texts.emplace_back(text);

    auto const sp = text.find(' ');
    auto const head = text.substr(0, sp);
    if (is_enhanced_status(head) && (!enhanced || *enhanced == head)) {
      enhanced = std::string(head);
    } else {
      all_enhanced = false;
    }

    if (last) {
      if (!wire.empty())
        return std::nullopt;
      break;
    }
    if (wire.empty())
      return std::nullopt;
  }
  if (first)
    return std::nullopt;

  if (enhanced && all_enhanced) {
    reply.enhanced_status = enhanced;
    for (auto const& t : raw_texts) {
      auto const sp = t.find(' ');
      reply.lines.push_back(sp == std::string::npos ? std::string{} : t.substr(sp + 1));
    }
  } else {
    reply.lines = std::move(raw_texts);
  }
  if (reply.code < 200 || reply.code > 599)
    return std::nullopt;
  return reply;
}

std::size_t complete_reply_length(std::string_view buffer) noexcept
{
  std::size_t pos = 0;
  while (pos < buffer.size()) {
    auto const eol = buffer.find("\r\n", pos);
    if (eol == std::string_view::npos)
      return 0;
    auto const line = buffer.substr(pos, eol - pos);
    pos = eol + 2;
    if (line.size() <= 3 || line[3] != '-')
      return pos;
  }
  return 0;
}

}  // namespace abl::smtp
