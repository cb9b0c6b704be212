#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "abl/blacklist/store.hpp"
#include "abl/classifier.hpp"
#include "abl/mta/config.hpp"
#include "abl/mta/metrics.hpp"
#include "abl/smtp/session.hpp"

namespace abl::mta {

using Clock = std::function<blacklist::Timestamp()>;

blacklist::Timestamp system_now();

struct SessionContext {
  ServerConfig const& config;
  blacklist::AblStore& store;
  classify::Classifier const& classifier;
  Metrics& metrics;
  Clock clock;
};

struct Output {
  std::string bytes;
  std::chrono::milliseconds delay{0};  // wait this long before writing
};

enum class SessionOutcome { Accepted, BlockedConnect, BlockedMail, Error };
std::string_view to_string(SessionOutcome outcome) noexcept;

// One SMTP session with the ABL checkpoints wired in, independent of any
// socket: bytes go in through feed(), replies come out as Outputs.
class SessionDriver {
public:
  SessionDriver(SessionContext ctx, std::string client_ip);

  std::vector<Output> open();
  std::vector<Output> feed(std::string_view bytes);
  // Read timeout expired: 421 during a normal dialogue, silent close while
  // lingering after a policy rejection.
  std::vector<Output> on_timeout();
  void mark_error() noexcept { error_ = true; }

  bool closed() const noexcept { return closed_; }
  std::chrono::milliseconds read_timeout() const noexcept;
  SessionOutcome outcome() const noexcept;
  smtp::SessionState const& state() const noexcept { return state_; }

private:
  void emit(std::vector<Output>& out, smtp::Reply const& reply, std::chrono::milliseconds delay = {});
  void handle_line(std::vector<Output>& out, std::string_view line);
  void finish_data(std::vector<Output>& out);
  blacklist::AblVerdict checkpoint(blacklist::SenderIdentity const& identity);
  void after_step(smtp::StepResult const& result);

  SessionContext ctx_;
  smtp::SessionState state_;
  std::string buffer_;
  bool discarding_ = false;  // skipping the rest of an over-long line
  bool lingering_ = false;   // policy-rejected, waiting for one last command
  bool closed_ = false;
  bool error_ = false;
  bool blocked_connect_ = false;
  bool blocked_mail_ = false;
};

}  // namespace abl::mta
