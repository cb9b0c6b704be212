#include "abl/mta/server.hpp"

#include <pthread.h>
#include <signal.h>
#include <sys/socket.h>

#include <filesystem>
#include <fstream>

#include <spdlog/spdlog.h>

#include "abl/util/kv_file.hpp"

namespace abl::mta {

Server::Server(ServerConfig config, Clock clock)
    : config_((config.validate(), std::move(config))),
      clock_(std::move(clock)),
      store_(config_.ttl_policy, config_.max_entries),
      classifier_(config_.classifier_config()),
      admin_(store_, metrics_, clock_, [this](std::string& error) { return snapshot_now(error); })
{
}

Server::~Server() { stop(); }

void Server::start()
{
  if (started_.exchange(true))
    return;
  try {
    if (!config_.snapshot_path.empty() && std::filesystem::exists(config_.snapshot_path)) {
      store_.load(read_file(config_.snapshot_path), clock_());
      spdlog::info("loaded {} blacklist entries from {}", store_.size(), config_.snapshot_path);
    }
    wake_ = std::make_unique<net::WakePipe>();
    smtp_listener_ = net::listen_tcp(net::Endpoint::parse(config_.listen_address));
    smtp_port_ = net::local_port(smtp_listener_);
    admin_listener_ = net::listen_tcp(net::Endpoint::parse(config_.admin_listen_address));
    admin_port_ = net::local_port(admin_listener_);
  } catch (...) {
    started_ = false;
    throw;
  }

  accept_thread_ = std::thread([this] { accept_loop(); });
  admin_thread_ = std::thread([this] { admin_loop(); });
  snapshot_thread_ = std::thread([this] { snapshot_loop(); });
}

void Server::stop() { shutdown(true); }

void Server::kill() { shutdown(false); }

bool Server::sleep_interruptible(std::chrono::milliseconds delay)
{
  std::unique_lock lock(mutex_);
  return !cv_.wait_for(lock, delay, [this] { return stopping_.load(); });
}

bool Server::snapshot_now(std::string& error)
{
  if (config_.snapshot_path.empty()) {
    error = "snapshot_path is not configured";
    return false;
  }
  std::lock_guard lock(snapshot_mutex_);
  auto const tmp = config_.snapshot_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << store_.persist();
    out.flush();
    if (!out) {
      error = "cannot write " + tmp;
      return false;
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, config_.snapshot_path, ec);
  if (ec) {
    error = "cannot rename " + tmp + ": " + ec.message();
    return false;
  }
  ++snapshots_written_;
  return true;
}

void Server::accept_loop()
{
  while (!stopping_) {
    auto sock = net::accept_client(smtp_listener_, wake_->read_fd(), std::chrono::milliseconds(500));
    if (!sock.valid())
      continue;
    if (active_sessions_.load() >= config_.max_concurrent_sessions) {
      ++metrics_.connections_total;
      auto const reply = smtp::render_reply(smtp::replies::too_many_sessions());
      if (net::write_all(sock, reply))
        metrics_.bytes_out += reply.size();
      spdlog::info("session peer={} outcome=error bytes_in=0 bytes_out={} (session cap)",
                   net::peer_endpoint(sock).to_string(), reply.size());
      continue;
    }
    ++active_sessions_;
    {
      std::lock_guard lock(mutex_);
      ++workers_;
    }
    std::thread([this, s = std::move(sock)]() mutable { run_session(std::move(s)); }).detach();
  }
}

void Server::run_session(net::Socket socket)
{
  {
    std::lock_guard lock(mutex_);
    open_fds_.insert(socket.fd());
  }
  auto const peer = net::peer_endpoint(socket);
  SessionDriver driver({config_, store_, classifier_, metrics_, clock_}, peer.host);
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;

  auto const send = [&](std::vector<Output> const& outputs) {
    for (auto const& o : outputs) {
      if (o.delay.count() > 0)
        sleep_interruptible(o.delay);
      if (!net::write_all(socket, o.bytes)) {
        driver.mark_error();
        return false;
      }
      bytes_out += o.bytes.size();
    }
    return true;
  };

  bool ok = send(driver.open());
  char buf[16384];
  while (ok && !driver.closed()) {
    auto const r = net::read_some(socket, buf, sizeof buf, driver.read_timeout());
    if (r.status == net::ReadStatus::Data) {
      bytes_in += r.bytes;
      ok = send(driver.feed(std::string_view(buf, r.bytes)));
    } else if (r.status == net::ReadStatus::Timeout) {
      ok = send(driver.on_timeout());
    } else {
      if (r.status == net::ReadStatus::Error)
        driver.mark_error();
      break;
    }
  }

  spdlog::info("session peer={} outcome={} bytes_in={} bytes_out={}", peer.to_string(),
               to_string(driver.outcome()), bytes_in, bytes_out);

  std::lock_guard lock(mutex_);
  open_fds_.erase(socket.fd());
  socket.reset();
  --active_sessions_;
  --workers_;
  cv_.notify_all();
}

void Server::admin_loop()
{
  while (!stopping_) {
    auto sock = net::accept_client(admin_listener_, wake_->read_fd(), std::chrono::milliseconds(500));
    if (!sock.valid())
      continue;
    {
      std::lock_guard lock(mutex_);
      ++workers_;
    }
    std::thread([this, s = std::move(sock)]() mutable { run_admin(std::move(s)); }).detach();
  }
}

void Server::run_admin(net::Socket socket)
{
  {
    std::lock_guard lock(mutex_);
    open_fds_.insert(socket.fd());
  }
  std::string buffer;
  char buf[4096];
  bool open = true;
  while (open) {
    auto const r = net::read_some(socket, buf, sizeof buf, config_.command_timeout);
    if (r.status != net::ReadStatus::Data)
      break;
    buffer.append(buf, r.bytes);
    for (auto eol = buffer.find('\n'); open && eol != std::string::npos; eol = buffer.find('\n')) {
      auto line = buffer.substr(0, eol);
      buffer.erase(0, eol + 1);
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      auto const response = admin_.handle(line);
      if (!net::write_all(socket, response.render()) || response.close)
        open = false;
    }
    if (buffer.size() > 64 * 1024)
      break;
  }

  std::lock_guard lock(mutex_);
  open_fds_.erase(socket.fd());
  socket.reset();
  --workers_;
  cv_.notify_all();
}

void Server::snapshot_loop()
{
  if (config_.snapshot_path.empty())
    return;
  while (sleep_interruptible(config_.snapshot_interval)) {
    std::string error;
    if (!snapshot_now(error))
      spdlog::error("periodic snapshot failed: {}", error);
  }
}

void Server::shutdown(bool final_snapshot)
{
  if (!started_ || stopping_.exchange(true))
    return;
  wake_->notify();
  {
    std::lock_guard lock(mutex_);
    cv_.notify_all();
  }
  for (auto* t : {&accept_thread_, &admin_thread_, &snapshot_thread_})
    if (t->joinable())
      t->join();
  smtp_listener_.reset();
  admin_listener_.reset();

  {
    std::unique_lock lock(mutex_);
    auto const grace = final_snapshot ? std::chrono::duration_cast<std::chrono::milliseconds>(config_.shutdown_grace)
                                      : std::chrono::milliseconds(0);
    cv_.wait_for(lock, grace, [this] { return workers_ == 0; });
    for (int fd : open_fds_)
      ::shutdown(fd, SHUT_RDWR);
    cv_.wait(lock, [this] { return workers_ == 0; });
  }

  if (final_snapshot && !config_.snapshot_path.empty()) {
    std::string error;
    if (!snapshot_now(error))
      spdlog::error("final snapshot failed: {}", error);
  }
}

int serve(ServerConfig const& config)
{
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  spdlog::set_level(spdlog::level::from_str(config.log_level));
  spdlog::set_pattern("%Y-%m-%dT%H:%M:%S.%e%z %l %v");

  try {
    Server server(config);
    server.start();
    spdlog::info("listening smtp={} admin={} abl_enabled={} policy={}", server.smtp_port(), server.admin_port(),
                 config.abl_enabled, smtp::to_string(config.policy));
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("received signal {}, shutting down", sig);
    server.stop();
  } catch (std::exception const& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

}  // namespace abl::mta
