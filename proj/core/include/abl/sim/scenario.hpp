#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abl/mta/config.hpp"

namespace abl::sim {

class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class SenderKind { Spammer, Legit };
enum class AddressRotation { Fixed, PerMessage };
enum class RunSelection { AblOn, AblOff, Both };

struct SenderProfile {
  std::string name = "sender";
  SenderKind kind = SenderKind::Legit;
  std::size_t count = 1;
  std::size_t messages_per_sender = 1;
  std::size_t payload_octets = 1024;
  bool retry_on_reject = true;
  std::chrono::milliseconds inter_message_delay{0};
  AddressRotation address_rotation = AddressRotation::Fixed;
};

struct ScenarioConfig {
  std::vector<SenderProfile> senders;
  std::uint64_t rng_seed = 1;
  RunSelection runs = RunSelection::Both;
  std::string trigger_keyword = "lottery";
  // Policy, TTL and classifier settings for the server under test. Listen
  // addresses and snapshot settings are replaced per run.
  mta::ServerConfig server = default_server();

  static mta::ServerConfig default_server();
  void validate() const;  // throws ScenarioError
};

// Same `key = value` format as the server configuration; global keys are
// seed, runs, trigger_keyword and any server key. Each `[sender.<name>]`
// section defines one profile: kind, count, messages, payload_octets,
// retry_on_reject, inter_message_delay_ms, address_rotation.
ScenarioConfig parse_scenario(std::string_view text);
ScenarioConfig read_scenario_file(std::filesystem::path const& path);

}  // namespace abl::sim
