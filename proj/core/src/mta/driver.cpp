#include "abl/mta/driver.hpp"

#include <chrono>

namespace abl::mta {

blacklist::Timestamp system_now()
{
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string_view to_string(SessionOutcome outcome) noexcept
{
  switch (outcome) {
  case SessionOutcome::Accepted:
    return "accepted";
  case SessionOutcome::BlockedConnect:
    return "blocked_connect";
  case SessionOutcome::BlockedMail:
    return "blocked_mail";
  case SessionOutcome::Error:
    return "error";
  }
  return "error";
}

SessionDriver::SessionDriver(SessionContext ctx, std::string client_ip) : ctx_(std::move(ctx))
{
  state_.envelope.client_ip = std::move(client_ip);
}

std::chrono::milliseconds SessionDriver::read_timeout() const noexcept
{
  if (lingering_)
    return ctx_.config.reject_linger;
  return ctx_.config.command_timeout;
}

SessionOutcome SessionDriver::outcome() const noexcept
{
  if (blocked_connect_)
    return SessionOutcome::BlockedConnect;
  if (blocked_mail_)
    return SessionOutcome::BlockedMail;
  if (error_)
    return SessionOutcome::Error;
  return SessionOutcome::Accepted;
}

void SessionDriver::emit(std::vector<Output>& out, smtp::Reply const& reply,
                         std::chrono::milliseconds delay)
{
  auto bytes = smtp::render_reply(reply);
  ctx_.metrics.bytes_out += bytes.size();
  out.push_back({std::move(bytes), delay});
}

blacklist::AblVerdict SessionDriver::checkpoint(blacklist::SenderIdentity const& identity)
{
  auto const now = ctx_.clock();
  if (!blacklist::is_blacklisted(ctx_.store.check(identity, now)))
    return blacklist::Clean{};
  auto refreshed = ctx_.store.record_blocked_attempt(identity, now);
  if (!refreshed)
    return blacklist::Clean{};
  ++ctx_.metrics.blocked_attempts_refreshed;
  return blacklist::Blacklisted{*std::move(refreshed)};
}

void SessionDriver::after_step(smtp::StepResult const& result)
{
  state_ = result.state;
  if (state_.phase == smtp::Phase::Closed) {
    if (state_.blocked && ctx_.config.policy.closes_session())
      lingering_ = true;
    else
      closed_ = true;
  }
}

std::vector<Output> SessionDriver::open()
{
  std::vector<Output> out;
  ++ctx_.metrics.connections_total;

  blacklist::AblVerdict verdict = blacklist::Clean{};
  if (ctx_.config.abl_enabled) {
    if (auto const id = blacklist::SenderIdentity::make(state_.envelope.client_ip))
      verdict = checkpoint(*id);
  }
  if (blacklist::is_blacklisted(verdict)) {
    blocked_connect_ = true;
    ++ctx_.metrics.sessions_blocked_at_connect;
  }

  smtp::SessionOptions options{ctx_.config.greeting_domain, ctx_.config.max_message_octets};
  auto result = smtp::open_session(state_.envelope.client_ip, verdict, ctx_.config.policy, std::move(options));
  emit(out, result.reply, result.delay);
  after_step(result);
  return out;
}

std::vector<Output> SessionDriver::on_timeout()
{
  std::vector<Output> out;
  if (closed_)
    return out;
  if (!lingering_) {
    error_ = true;
    emit(out, smtp::replies::timeout());
  }
  closed_ = true;
  return out;
}

void SessionDriver::finish_data(std::vector<Output>& out)
{
  auto disposition = smtp::DataDisposition::Accept;
  if (!state_.data.overflow) {
    auto const verdict = ctx_.classifier.classify(state_.envelope, state_.data.body);
    if (verdict.is_spam) {
      ++ctx_.metrics.messages_classified_spam;
      if (ctx_.config.abl_enabled) {
        auto const now = ctx_.clock();
        auto const& sender = state_.envelope.reverse_path;
        if (auto const full = blacklist::SenderIdentity::make(
                state_.envelope.client_ip, sender ? std::optional<std::string_view>(*sender) : std::nullopt)) {
          ctx_.store.record_spam(*full, verdict.reason, now);
          if (!full->is_ip_only())
            ctx_.store.record_spam(full->ip_projection(), verdict.reason, now);
        }
        if (ctx_.config.reject_triggering_message)
          disposition = smtp::DataDisposition::RejectSpam;
      }
    }
    if (disposition == smtp::DataDisposition::Accept)
      ++ctx_.metrics.messages_accepted;
  }
  auto result = smtp::complete_data(std::move(state_), disposition);
  emit(out, result.reply, result.delay);
  after_step(result);
}

void SessionDriver::handle_line(std::vector<Output>& out, std::string_view line)
{
  if (lingering_) {
    closed_ = true;
    auto const parsed = smtp::parse_command(line);
    if (auto const* cmd = std::get_if<smtp::Command>(&parsed);
        cmd && smtp::kind_of(*cmd) == smtp::CommandKind::Quit) {
      emit(out, smtp::make_reply(221, "2.0.0", ctx_.config.greeting_domain + " closing connection"));
    }
    return;
  }

  auto const parsed = smtp::parse_command(line);
  if (auto const* err = std::get_if<smtp::ParseError>(&parsed)) {
    switch (err->kind) {
    case smtp::ParseError::Kind::LineTooLong:
      emit(out, smtp::replies::line_too_long());
      break;
    case smtp::ParseError::Kind::MissingCrlf:
      emit(out, smtp::replies::missing_crlf());
      break;
    case smtp::ParseError::Kind::BadSyntax:
      emit(out, smtp::replies::syntax_error());
      break;
    }
    return;
  }
  auto const& cmd = std::get<smtp::Command>(parsed);

  blacklist::AblVerdict verdict = blacklist::Clean{};
  if (ctx_.config.abl_enabled && state_.phase == smtp::Phase::Greeted) {
    if (auto const* mail = std::get_if<smtp::MailFrom>(&cmd)) {
      if (auto const id = blacklist::SenderIdentity::make(state_.envelope.client_ip, mail->reverse_path))
        verdict = checkpoint(*id);
      if (blacklist::is_blacklisted(verdict) && !blocked_connect_ && !blocked_mail_) {
        blocked_mail_ = true;
        ++ctx_.metrics.sessions_blocked_at_mail;
      }
    }
  }

  auto result = smtp::step(state_, cmd, verdict, ctx_.config.policy);
  emit(out, result.reply, result.delay);
  after_step(result);
}

std::vector<Output> SessionDriver::feed(std::string_view bytes)
{
  std::vector<Output> out;
  ctx_.metrics.bytes_in += bytes.size();
  if (closed_)
    return out;
  buffer_.append(bytes);

  while (!closed_ && !buffer_.empty()) {
    if (state_.phase == smtp::Phase::ReceivingData) {
      auto const before = state_.envelope.data_octets;
      auto const progress = smtp::receive_data(state_, buffer_);
      ctx_.metrics.data_octets_received += state_.envelope.data_octets - before;
      buffer_.erase(0, progress.consumed);
      if (!progress.terminated)
        break;
      finish_data(out);
      continue;
    }

    auto const eol = buffer_.find('\n');
    if (discarding_) {
      if (eol == std::string::npos) {
        buffer_.clear();
        break;
      }
      buffer_.erase(0, eol + 1);
      discarding_ = false;
      continue;
    }
    if (eol == std::string::npos) {
      if (buffer_.size() > smtp::kMaxCommandLine) {
        emit(out, smtp::replies::line_too_long());
        discarding_ = true;
        buffer_.clear();
      }
      break;
    }
    auto const line = buffer_.substr(0, eol + 1);
    buffer_.erase(0, eol + 1);
    handle_line(out, line);
  }
  return out;
}

}  // namespace abl::mta
