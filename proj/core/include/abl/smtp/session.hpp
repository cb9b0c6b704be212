#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abl/blacklist/entry.hpp"
#include "abl/smtp/command.hpp"
#include "abl/smtp/reply.hpp"

namespace abl::smtp {

inline constexpr std::uint64_t kDefaultMaxMessageOctets = 10ull * 1024 * 1024;

enum class Phase { Connected, Greeted, MailAccepted, RcptAccepted, ReceivingData, Closed };

std::string_view to_string(Phase phase) noexcept;

struct Envelope {
  std::string client_ip;
  std::string helo_domain;
  std::optional<std::string> reverse_path;  // "" is the null sender, nullopt is "no MAIL yet"
  std::vector<std::string> forward_paths;
  std::uint64_t data_octets = 0;

  bool operator==(Envelope const&) const = default;
};

// Byte-level DATA reader: un-stuffs leading dots and finds CRLF.CRLF.
struct DataCursor {
  enum class State { LineStart, Dot, DotCr, Middle, Cr };
  State state = State::LineStart;
  std::string body;
  bool overflow = false;

  bool operator==(DataCursor const&) const = default;
};

struct SessionOptions {
  std::string server_domain = "localhost";
  std::uint64_t max_message_octets = kDefaultMaxMessageOctets;

  bool operator==(SessionOptions const&) const = default;
};

struct SessionState {
  Phase phase = Phase::Connected;
  Envelope envelope;
  bool blocked = false;  // set when the ABL answered a checkpoint
  SessionOptions options;
  DataCursor data;

  bool operator==(SessionState const&) const = default;
};

struct RejectPolicy {
  enum class Mode { RejectEarly554, TempFail451, Tarpit };
  static constexpr std::chrono::milliseconds kDefaultTarpitDelay{10000};

  Mode mode = Mode::RejectEarly554;
  std::chrono::milliseconds tarpit_delay = kDefaultTarpitDelay;

  static RejectPolicy reject_early() { return {Mode::RejectEarly554, kDefaultTarpitDelay}; }
  static RejectPolicy temp_fail() { return {Mode::TempFail451, kDefaultTarpitDelay}; }
  static RejectPolicy tarpit(std::chrono::milliseconds delay = kDefaultTarpitDelay)
  {
    return {Mode::Tarpit, delay};
  }

  bool closes_session() const noexcept { return mode == Mode::RejectEarly554; }

  bool operator==(RejectPolicy const&) const = default;
};

// "reject554", "tempfail451", "tarpit" (optionally "tarpit:<ms>").
std::optional<RejectPolicy> parse_reject_policy(std::string_view text);
std::string to_string(RejectPolicy const& policy);

struct StepResult {
  SessionState state;
  Reply reply;
  std::chrono::milliseconds delay{0};  // hold the reply back this long (tarpit)
};

// Fixed reply texts; transcripts depend on them octet for octet.
namespace replies {
Reply greeting(std::string_view server_domain);
Reply blocked();
Reply deferred();
Reply bad_sequence();
Reply unrecognized();
Reply not_implemented();
Reply syntax_error();
Reply line_too_long();
Reply missing_crlf();
Reply message_too_large();
Reply spam_rejected();
Reply message_accepted();
Reply too_many_sessions();
Reply timeout();
Reply shutting_down();
}  // namespace replies

// Connect checkpoint: greets the client, or applies `policy` when the
// client IP is blacklisted.
StepResult open_session(std::string client_ip, blacklist::AblVerdict const& verdict,
                        RejectPolicy const& policy, SessionOptions options = {});

// Advances the dialogue by one command. `verdict` only matters for MAIL
// in the Greeted phase (the MAIL checkpoint); it is ignored elsewhere.
StepResult step(SessionState state, Command const& cmd, blacklist::AblVerdict const& verdict,
                RejectPolicy const& policy);

struct DataProgress {
  bool terminated = false;
  std::size_t consumed = 0;  // octets of `chunk` that belong to the DATA phase
};

// Feeds DATA-phase octets. Stops right after the terminator; octets beyond
// it (pipelined commands) are left for the caller. Body octets past
// max_message_octets are counted but not stored, and set data.overflow.
DataProgress receive_data(SessionState& state, std::string_view chunk);

enum class DataDisposition { Accept, RejectSpam };

// Closes a terminated DATA phase: 552 on overflow, otherwise 250 or 554 per
// `disposition`. Always returns to Greeted with an empty envelope.
StepResult complete_data(SessionState state, DataDisposition disposition);

}  // namespace abl::smtp
