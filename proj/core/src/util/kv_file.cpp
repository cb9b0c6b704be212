#include "abl/util/kv_file.hpp"

#include <fstream>
#include <sstream>

#include "abl/util/text.hpp"

namespace abl {

KvError::KvError(std::size_t line, std::string const& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
{
}

KvDocument parse_kv(std::string_view text, bool allow_sections)
{
  KvDocument doc;
  std::size_t lineno = 0;
  for (auto raw : text::split(text, '\n')) {
    ++lineno;
    auto const line = text::trim(raw);
    if (line.empty() || line.front() == '#')
      continue;

    if (line.front() == '[') {
      if (!allow_sections)
        throw KvError(lineno, "sections are not allowed here");
      if (line.back() != ']' || line.size() < 3)
        throw KvError(lineno, "malformed section header");
      doc.sections.push_back({std::string(text::trim(line.substr(1, line.size() - 2))), lineno, {}});
      continue;
    }

    auto const eq = line.find('=');
    if (eq == std::string_view::npos)
      throw KvError(lineno, "expected `key = value`");
    auto const key = text::trim(line.substr(0, eq));
    if (key.empty())
      throw KvError(lineno, "empty key");
    KvEntry entry{std::string(key), std::string(text::trim(line.substr(eq + 1))), lineno};
    if (doc.sections.empty())
      doc.global.push_back(std::move(entry));
    else
      doc.sections.back().entries.push_back(std::move(entry));
  }
  return doc;
}

std::string read_file(std::filesystem::path const& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KvDocument read_kv_file(std::filesystem::path const& path, bool allow_sections)
{
  return parse_kv(read_file(path), allow_sections);
}

}  // namespace abl
