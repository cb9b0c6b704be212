#include "abl/smtp/session.hpp"

#include <array>
#include <string>

#include "abl/util/text.hpp"

namespace abl::smtp {

std::string_view to_string(Phase phase) noexcept
{
  static constexpr std::array<std::string_view, 6> names{
      "Connected", "Greeted", "MailAccepted", "RcptAccepted", "ReceivingData", "Closed"};
  return names[static_cast<std::size_t>(phase)];
}

std::optional<RejectPolicy> parse_reject_policy(std::string_view text)
{
  text = text::trim(text);
  if (text::iequals(text, "reject554") || text::iequals(text, "RejectEarly554"))
    return RejectPolicy::reject_early();
  if (text::iequals(text, "tempfail451") || text::iequals(text, "TempFail451"))
    return RejectPolicy::temp_fail();
  if (text::iequals(text, "tarpit") || text::iequals(text, "Tarpit"))
    return RejectPolicy::tarpit();
  if (text::istarts_with(text, "tarpit:")) {
    auto const ms = text::parse_uint(text.substr(7));
    if (!ms)
      return std::nullopt;
    return RejectPolicy::tarpit(std::chrono::milliseconds(*ms));
  }
  return std::nullopt;
}

std::string to_string(RejectPolicy const& policy)
{
  switch (policy.mode) {
  case RejectPolicy::Mode::RejectEarly554:
    return "reject554";
  case RejectPolicy::Mode::TempFail451:
    return "tempfail451";
  case RejectPolicy::Mode::Tarpit:
    return "tarpit:" + std::to_string(policy.tarpit_delay.count());
  }
  return "reject554";
}

namespace replies {
Reply greeting(std::string_view server_domain)
{
  return make_reply(220, std::string(server_domain) + " ESMTP ready");
}
Reply blocked() { return make_reply(554, "5.7.1", "blocked by ABL"); }
Reply deferred() { return make_reply(451, "4.7.1", "temporarily deferred by ABL"); }
Reply bad_sequence() { return make_reply(503, "5.5.1", "bad sequence of commands"); }
Reply unrecognized() { return make_reply(500, "5.5.2", "command not recognized"); }
Reply not_implemented() { return make_reply(502, "5.5.1", "command not implemented"); }
Reply syntax_error() { return make_reply(501, "5.5.4", "syntax error in parameters or arguments"); }
Reply line_too_long() { return make_reply(500, "5.5.2", "line too long"); }
Reply missing_crlf() { return make_reply(500, "5.5.2", "line must end with CRLF"); }
Reply message_too_large() { return make_reply(552, "5.3.4", "message size exceeds fixed maximum"); }
Reply spam_rejected() { return make_reply(554, "5.7.1", "message rejected as spam"); }
Reply message_accepted() { return make_reply(250, "2.0.0", "message accepted"); }
Reply too_many_sessions() { return make_reply(421, "4.3.2", "too many sessions, try again later"); }
Reply timeout() { return make_reply(421, "4.4.2", "timeout exceeded, closing connection"); }
Reply shutting_down() { return make_reply(421, "4.3.2", "server shutting down"); }
}  // namespace replies

namespace {

void reset_transaction(SessionState& s)
{
  s.envelope.reverse_path.reset();
  s.envelope.forward_paths.clear();
  s.envelope.data_octets = 0;
  s.data = DataCursor{};
}

StepResult apply_policy(SessionState state, RejectPolicy const& policy)
{
  state.blocked = true;
  switch (policy.mode) {
  case RejectPolicy::Mode::RejectEarly554:
    state.phase = Phase::Closed;
    reset_transaction(state);
    return {std::move(state), replies::blocked(), {}};
  case RejectPolicy::Mode::TempFail451:
    return {std::move(state), replies::deferred(), {}};
  case RejectPolicy::Mode::Tarpit:
    return {std::move(state), replies::deferred(), policy.tarpit_delay};
  }
  return {std::move(state), replies::blocked(), {}};
}

Reply ehlo_reply(SessionState const& s)
{
  return Reply{250,
               std::nullopt,
               {s.options.server_domain + " greets " + s.envelope.helo_domain, "PIPELINING",
                "SIZE " + std::to_string(s.options.max_message_octets)}};
}

}  // namespace

StepResult open_session(std::string client_ip, blacklist::AblVerdict const& verdict,
                        RejectPolicy const& policy, SessionOptions options)
{
  SessionState state;
  state.envelope.client_ip = std::move(client_ip);
  state.options = std::move(options);
  if (blacklist::is_blacklisted(verdict))
    return apply_policy(std::move(state), policy);
  auto reply = replies::greeting(state.options.server_domain);
  return {std::move(state), std::move(reply), {}};
}

StepResult step(SessionState state, Command const& cmd, blacklist::AblVerdict const& verdict,
                RejectPolicy const& policy)
{
  if (state.phase == Phase::Closed || state.phase == Phase::ReceivingData)
    return {std::move(state), replies::bad_sequence(), {}};

  switch (kind_of(cmd)) {
  case CommandKind::Helo:
  case CommandKind::Ehlo: {
    reset_transaction(state);
    state.phase = Phase::Greeted;
    if (auto const* h = std::get_if<Helo>(&cmd)) {
      state.envelope.helo_domain = h->domain;
      auto reply = make_reply(250, state.options.server_domain);
      return {std::move(state), std::move(reply), {}};
    }
    state.envelope.helo_domain = std::get<Ehlo>(cmd).domain;
    auto reply = ehlo_reply(state);
    return {std::move(state), std::move(reply), {}};
  }

  case CommandKind::MailFrom: {
    if (state.phase != Phase::Greeted)
      return {std::move(state), replies::bad_sequence(), {}};
    if (blacklist::is_blacklisted(verdict))
      return apply_policy(std::move(state), policy);
    auto const& mail = std::get<MailFrom>(cmd);
    if (mail.declared_size && *mail.declared_size > state.options.max_message_octets)
      return {std::move(state), replies::message_too_large(), {}};
    state.envelope.reverse_path = mail.reverse_path;
    state.phase = Phase::MailAccepted;
    return {std::move(state), make_reply(250, "2.1.0", "sender ok"), {}};
  }

  case CommandKind::RcptTo:
    if (state.phase != Phase::MailAccepted && state.phase != Phase::RcptAccepted)
      return {std::move(state), replies::bad_sequence(), {}};
    state.envelope.forward_paths.push_back(std::get<RcptTo>(cmd).forward_path);
    state.phase = Phase::RcptAccepted;
    return {std::move(state), make_reply(250, "2.1.5", "recipient ok"), {}};

  case CommandKind::Data:
    if (state.phase != Phase::RcptAccepted)
      return {std::move(state), replies::bad_sequence(), {}};
    state.phase = Phase::ReceivingData;
    state.envelope.data_octets = 0;
    state.data = DataCursor{};
    return {std::move(state), make_reply(354, "end data with <CR><LF>.<CR><LF>"), {}};

  case CommandKind::Rset:
    reset_transaction(state);
    if (state.phase != Phase::Connected)
      state.phase = Phase::Greeted;
    return {std::move(state), make_reply(250, "2.0.0", "OK"), {}};

  case CommandKind::Noop:
    return {std::move(state), make_reply(250, "2.0.0", "OK"), {}};

  case CommandKind::Quit: {
    state.phase = Phase::Closed;
    auto reply = make_reply(221, "2.0.0", state.options.server_domain + " closing connection");
    return {std::move(state), std::move(reply), {}};
  }

  case CommandKind::Unknown:
    if (is_unimplemented_verb(std::get<Unknown>(cmd).verb))
      return {std::move(state), replies::not_implemented(), {}};
    return {std::move(state), replies::unrecognized(), {}};
  }
  return {std::move(state), replies::unrecognized(), {}};
}

DataProgress receive_data(SessionState& state, std::string_view chunk)
{
  using S = DataCursor::State;
  auto& cur = state.data;
  auto const max = state.options.max_message_octets;

  auto emit = [&](char c) {
    if (state.envelope.data_octets >= max)
      cur.overflow = true;
    else
      cur.body.push_back(c);
    ++state.envelope.data_octets;
  };

  for (std::size_t i = 0; i < chunk.size(); ++i) {
    char const c = chunk[i];
    switch (cur.state) {
    case S::LineStart:
      if (c == '.') {
        cur.state = S::Dot;
      } else {
        emit(c);
        cur.state = c == '\r' ? S::Cr : S::Middle;
      }
      break;
    case S::Dot:
      // The leading dot is dropped whatever follows it.
      if (c == '\r') {
        cur.state = S::DotCr;
      } else {
        emit(c);
        cur.state = S::Middle;
      }
      break;
    case S::DotCr:
      if (c == '\n') {
        cur.state = S::LineStart;
        return {true, i + 1};
      }
      emit('\r');
      emit(c);
      cur.state = c == '\r' ? S::Cr : S::Middle;
      break;
    case S::Cr:
      emit(c);
      cur.state = c == '\n' ? S::LineStart : (c == '\r' ? S::Cr : S::Middle);
      break;
    case S::Middle:
      emit(c);
      if (c == '\r')
        cur.state = S::Cr;
      break;
    }
  }
  return {false, chunk.size()};
}

StepResult complete_data(SessionState state, DataDisposition disposition)
{
  Reply reply = state.data.overflow                        ? replies::message_too_large()
                : disposition == DataDisposition::RejectSpam ? replies::spam_rejected()
                                                             : replies::message_accepted();
  state.phase = Phase::Greeted;
  reset_transaction(state);
  return {std::move(state), std::move(reply), {}};
}

}  // namespace abl::smtp
