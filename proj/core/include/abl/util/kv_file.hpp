#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace abl {

// Flat `key = value` text with `#` comment lines and optional `[section]`
// headers. Shared by the server configuration and scenario files.
struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct KvSection {
  std::string name;
  std::size_t line = 0;
  std::vector<KvEntry> entries;
};

struct KvDocument {
  std::vector<KvEntry> global;
  std::vector<KvSection> sections;
};

class KvError : public std::runtime_error {
public:
  KvError(std::size_t line, std::string const& what);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

KvDocument parse_kv(std::string_view text, bool allow_sections);
KvDocument read_kv_file(std::filesystem::path const& path, bool allow_sections);

std::string read_file(std::filesystem::path const& path);

}  // namespace abl
