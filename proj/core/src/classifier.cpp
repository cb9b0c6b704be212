#include "abl/classifier.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "abl/util/text.hpp"

extern char** environ;

namespace abl::classify {

std::vector<KeywordRule> parse_keywords(std::string_view text)
{
  std::vector<KeywordRule> rules;
  if (text::trim(text).empty())
    return rules;
  for (auto const item : text::split(text, ',')) {
    auto const t = text::trim(item);
    auto const colon = t.rfind(':');
    if (colon == std::string_view::npos)
      throw std::invalid_argument("keyword rule needs `word:weight`: " + std::string(t));
    auto const word = text::trim(t.substr(0, colon));
    auto const weight = text::parse_double(text::trim(t.substr(colon + 1)));
    if (word.empty() || !weight || *weight < 0)
      throw std::invalid_argument("invalid keyword rule: " + std::string(t));
    rules.push_back({std::string(word), *weight});
  }
  return rules;
}

std::string format_keywords(std::vector<KeywordRule> const& rules)
{
  std::string out;
  for (auto const& r : rules) {
    if (!out.empty())
      out += ',';
    out += fmt::format("{}:{}", r.keyword, r.weight);
  }
  return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) noexcept
{
  if (needle.empty() || needle.size() > haystack.size())
    return 0;
  std::size_t count = 0;
  std::size_t i = 0;
  while (i + needle.size() <= haystack.size()) {
    if (text::iequals(haystack.substr(i, needle.size()), needle)) {
      ++count;
      i += needle.size();
    } else {
      ++i;
    }
  }
  return count;
}

KeywordScorer::KeywordScorer(std::vector<KeywordRule> rules, double threshold)
    : rules_(std::move(rules)), threshold_(threshold)
{
  for (auto const& r : rules_)
    if (r.keyword.empty() || r.weight < 0)
      throw std::invalid_argument("keyword rules need a non-empty word and a weight >= 0");
}

ClassifierVerdict KeywordScorer::classify(smtp::Envelope const&, std::string_view body) const
{
  ClassifierVerdict v;
  for (auto const& rule : rules_) {
    auto const n = count_occurrences(body, rule.keyword);
    if (n == 0)
      continue;
    v.score += rule.weight * static_cast<double>(n);
    if (!v.reason.empty())
      v.reason += ' ';
    v.reason += fmt::format("{}x{}", rule.keyword, n);
  }
  v.is_spam = v.score >= threshold_;
  if (v.reason.empty())
    v.reason = "no keywords";
  return v;
}

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe()
  {
    if (::pipe2(fd, O_CLOEXEC) != 0)
      throw HookFailure("pipe: " + std::string(std::strerror(errno)));
  }
  ~Pipe()
  {
    close_read();
    close_write();
  }
  void close_read()
  {
    if (fd[0] >= 0)
      ::close(fd[0]);
    fd[0] = -1;
  }
  void close_write()
  {
    if (fd[1] >= 0)
      ::close(fd[1]);
    fd[1] = -1;
  }
};

void ignore_sigpipe()
{
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

double parse_score_line(std::string const& out)
{
  auto line = std::string_view(out).substr(0, out.find('\n'));
  if (!line.empty() && line.back() == '\r')
    line.remove_suffix(1);
  if (!line.starts_with("score="))
    throw HookFailure("hook output is not `score=<decimal>`");
  auto const score = text::parse_double(line.substr(6));
  if (!score || *score < 0)
    throw HookFailure("hook score is not a non-negative decimal");
  return *score;
}

}  // namespace

ClassifierVerdict classify_external(smtp::Envelope const& envelope, std::string_view body,
                                    HookSpec const& hook, double threshold)
{
  using clock = std::chrono::steady_clock;
  ignore_sigpipe();

  Pipe in;
  Pipe out;

  std::vector<std::string> env_storage;
  for (char** e = environ; e && *e; ++e)
    env_storage.emplace_back(*e);
  env_storage.push_back("ABL_CLIENT_IP=" + envelope.client_ip);
  env_storage.push_back("ABL_HELO=" + envelope.helo_domain);
  env_storage.push_back("ABL_REVERSE_PATH=" + envelope.reverse_path.value_or(""));
  std::vector<char*> envp;
  for (auto& s : env_storage)
    envp.push_back(s.data());
  envp.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in.fd[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out.fd[1], STDOUT_FILENO);

  std::string sh = "/bin/sh";
  std::string dash_c = "-c";
  std::string cmd = hook.command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};

  pid_t pid = -1;
  // Own process group, so a timeout also reaches whatever the shell started.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);
  int const rc = posix_spawn(&pid, "/bin/sh", &actions, &attr, argv, envp.data());
  posix_spawnattr_destroy(&attr);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0)
    throw HookFailure("spawn failed: " + std::string(std::strerror(rc)));

  in.close_read();
  out.close_write();
  ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);
  ::fcntl(out.fd[0], F_SETFL, O_NONBLOCK);

  auto const deadline = clock::now() + hook.timeout;
  auto const kill_child = [&](std::string const& why) -> HookFailure {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    return HookFailure(why);
  };

  std::size_t written = 0;
  std::string output;
  bool out_open = true;
  if (body.empty())
    in.close_write();

  while (out_open) {
    auto const left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    if (left.count() <= 0)
      throw kill_child("hook timed out");

    pollfd fds[2];
    nfds_t n = 0;
    fds[n++] = {out.fd[0], POLLIN, 0};
    if (in.fd[1] >= 0)
      fds[n++] = {in.fd[1], POLLOUT, 0};
    int const pr = ::poll(fds, n, static_cast<int>(left.count()));
    if (pr < 0 && errno != EINTR)
      throw kill_child("poll failed");

    if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      auto const w = ::write(in.fd[1], body.data() + written, body.size() - written);
      if (w > 0)
        written += static_cast<std::size_t>(w);
      // EPIPE: the hook stopped reading, which is its business.
      if ((w < 0 && errno != EAGAIN) || written == body.size())
        in.close_write();
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[4096];
      auto const r = ::read(out.fd[0], buf, sizeof buf);
      if (r > 0) {
        output.append(buf, static_cast<std::size_t>(r));
        if (output.size() > 64 * 1024)
          throw kill_child("hook output too large");
      } else if (r == 0 || errno != EAGAIN) {
        out_open = false;
      }
    }
  }
  in.close_write();

  int status = 0;
  for (;;) {
    auto const r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid)
      break;
    if (r < 0)
      throw HookFailure("waitpid failed");
    if (clock::now() >= deadline)
      throw kill_child("hook timed out");
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw HookFailure("hook exited with non-zero status");

  ClassifierVerdict v;
  v.score = parse_score_line(output);
  v.is_spam = v.score >= threshold;
  v.reason = fmt::format("hook score={}", v.score);
  return v;
}

Classifier::Classifier(ClassifierConfig config)
    : config_(std::move(config)), scorer_(config_.keywords, config_.threshold)
{
}

ClassifierVerdict Classifier::classify(smtp::Envelope const& envelope, std::string_view body) const
{
  if (!config_.hook)
    return scorer_.classify(envelope, body);
  try {
    return classify_external(envelope, body, *config_.hook, config_.threshold);
  } catch (std::exception const& e) {
    spdlog::warn("classifier hook failed ({}); treating message as not spam", e.what());
    return {0.0, false, std::string("hook failure: ") + e.what()};
  }
}

}  // namespace abl::classify
