#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abl/sim/scenario.hpp"

namespace abl::sim {

class SimError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunResult {
  std::string name;  // "abl_on" or "abl_off"

  // Server side, read back over the admin protocol.
  std::uint64_t connections = 0;
  std::uint64_t accepted = 0;
  std::uint64_t blocked_connect = 0;
  std::uint64_t blocked_mail = 0;
  std::uint64_t data_octets = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
  std::uint64_t blocked_attempts_refreshed = 0;

  // Client side.
  std::uint64_t attempted = 0;
  std::uint64_t client_data_octets = 0;  // payload octets of bodies the server took (354 seen)
  std::uint64_t legit_accepted = 0;
  std::uint64_t spam_accepted = 0;
  std::vector<std::string> transcripts;  // one per attempt, both directions

  double wall_seconds = 0.0;
};

struct SimReport {
  std::optional<RunResult> abl_on;
  std::optional<RunResult> abl_off;

  bool has_reduction() const noexcept { return abl_on && abl_off; }
  // rho = 1 - on/off as the exact fraction (off - on) / off; 0/1 when the
  // baseline received nothing.
  std::int64_t reduction_numerator() const noexcept;
  std::int64_t reduction_denominator() const noexcept;
  double reduction() const noexcept;
};

RunResult run_once(ScenarioConfig const& config, bool abl_enabled);
SimReport run_scenario(ScenarioConfig const& config);

// CSV: header, one row per run (abl_on first), then `reduction,<rho>` with
// six decimals when both runs are present.
std::string format_report(SimReport const& report);
void write_report(SimReport const& report, std::filesystem::path const& path);

}  // namespace abl::sim
