#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abl/blacklist/entry.hpp"
#include "abl/blacklist/store.hpp"
#include "abl/classifier.hpp"
#include "abl/smtp/session.hpp"

namespace abl::mta {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ServerConfig {
  std::string listen_address = "127.0.0.1:2525";
  std::string greeting_domain = "abl.example";
  smtp::RejectPolicy policy = smtp::RejectPolicy::reject_early();
  blacklist::TtlPolicy ttl_policy;
  std::size_t max_entries = blacklist::AblStore::kDefaultCapacity;
  std::vector<classify::KeywordRule> keywords;
  double spam_threshold = 5.0;
  std::string hook_command;  // empty selects the keyword scorer
  std::chrono::milliseconds hook_timeout{5000};
  std::uint64_t max_message_octets = smtp::kDefaultMaxMessageOctets;
  std::chrono::seconds command_timeout{300};
  std::size_t max_concurrent_sessions = 1024;
  std::string snapshot_path;  // empty disables persistence
  std::chrono::seconds snapshot_interval{60};
  std::string admin_listen_address = "127.0.0.1:2526";
  bool abl_enabled = true;
  bool reject_triggering_message = false;
  std::chrono::seconds shutdown_grace{10};
  // How long a policy-rejected session waits for the client's next command.
  std::chrono::milliseconds reject_linger{5000};
  std::string log_level = "info";

  void validate() const;  // throws ConfigError
  classify::ClassifierConfig classifier_config() const;
};

using Settings = std::vector<std::pair<std::string, std::string>>;

// Every key accepted in a configuration file and as a --<key> flag.
std::vector<std::string_view> const& config_keys();

void apply_setting(ServerConfig& config, std::string_view key, std::string_view value);
std::string get_setting(ServerConfig const& config, std::string_view key);

// Built-in defaults, then `file`, then `flags`; later layers win.
ServerConfig resolve_config(Settings const& file, Settings const& flags);

Settings read_settings_file(std::filesystem::path const& path);
Settings parse_settings(std::string_view text);

}  // namespace abl::mta
