#include "abl/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <fmt/format.h>

#include "abl/smtp/reply.hpp"
#include "abl/util/text.hpp"

namespace abl::net {
namespace {

std::string errno_text() { return std::strerror(errno); }

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo()
  {
    if (head)
      ::freeaddrinfo(head);
  }
};

void resolve(AddrInfo& out, std::string const& host, std::uint16_t port, bool passive)
{
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV | (passive ? AI_PASSIVE : 0);
  auto const service = std::to_string(port);
  int const rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &out.head);
  if (rc != 0)
    throw NetError(fmt::format("cannot resolve {}: {}", host, ::gai_strerror(rc)));
}

Endpoint endpoint_of(sockaddr_storage const& ss)
{
  char buf[INET6_ADDRSTRLEN] = {};
  if (ss.ss_family == AF_INET) {
    auto const& sin = reinterpret_cast<sockaddr_in const&>(ss);
    ::inet_ntop(AF_INET, &sin.sin_addr, buf, sizeof buf);
    return {buf, ntohs(sin.sin_port)};
  }
  auto const& sin6 = reinterpret_cast<sockaddr_in6 const&>(ss);
  ::inet_ntop(AF_INET6, &sin6.sin6_addr, buf, sizeof buf);
  return {buf, ntohs(sin6.sin6_port)};
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text)
{
  text = text::trim(text);
  Endpoint ep;
  std::string_view port;
  if (!text.empty() && text.front() == '[') {
    auto const close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':')
      throw std::invalid_argument("malformed endpoint: " + std::string(text));
    ep.host = std::string(text.substr(1, close - 1));
    port = text.substr(close + 2);
  } else {
    auto const colon = text.rfind(':');
    if (colon == std::string_view::npos)
      throw std::invalid_argument("endpoint needs host:port: " + std::string(text));
    ep.host = std::string(text.substr(0, colon));
    port = text.substr(colon + 1);
  }
  auto const p = text::parse_uint(port);
  if (!p || *p > 65535)
    throw std::invalid_argument("invalid port in endpoint: " + std::string(text));
  ep.port = static_cast<std::uint16_t>(*p);
  return ep;
}

std::string Endpoint::to_string() const
{
  if (host.find(':') != std::string::npos)
    return fmt::format("[{}]:{}", host, port);
  return fmt::format("{}:{}", host, port);
}

Socket& Socket::operator=(Socket&& other) noexcept
{
  if (this != &other) {
    reset();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() noexcept
{
  int const fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::reset() noexcept
{
  if (fd_ >= 0)
    ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() noexcept
{
  if (fd_ >= 0)
    ::shutdown(fd_, SHUT_RDWR);
}

Socket listen_tcp(Endpoint const& endpoint, int backlog)
{
  AddrInfo ai;
  resolve(ai, endpoint.host, endpoint.port, true);
  std::string last_error = "no addresses";
  for (auto* p = ai.head; p; p = p->ai_next) {
    Socket s(::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text();
      continue;
    }
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd(), p->ai_addr, p->ai_addrlen) != 0 || ::listen(s.fd(), backlog) != 0) {
      last_error = errno_text();
      continue;
    }
    return s;
  }
  throw NetError(fmt::format("cannot listen on {}: {}", endpoint.to_string(), last_error));
}

std::uint16_t local_port(Socket const& s)
{
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&ss), &len) != 0)
    throw NetError("getsockname: " + errno_text());
  return endpoint_of(ss).port;
}

Endpoint peer_endpoint(Socket const& s)
{
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getpeername(s.fd(), reinterpret_cast<sockaddr*>(&ss), &len) != 0)
    return {"0.0.0.0", 0};
  return endpoint_of(ss);
}

Socket accept_client(Socket const& listener, int wake_fd, std::chrono::milliseconds timeout)
{
  pollfd fds[2] = {{listener.fd(), POLLIN, 0}, {wake_fd, POLLIN, 0}};
  int const n = ::poll(fds, wake_fd >= 0 ? 2 : 1, static_cast<int>(timeout.count()));
  if (n <= 0 || (wake_fd >= 0 && (fds[1].revents & POLLIN)))
    return {};
  if (!(fds[0].revents & POLLIN))
    return {};
  return Socket(::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC));
}

Socket connect_tcp(Endpoint const& endpoint, std::optional<std::string> const& source_ip,
                   std::chrono::milliseconds timeout)
{
  AddrInfo ai;
  resolve(ai, endpoint.host, endpoint.port, false);
  std::string last_error = "no addresses";
  for (auto* p = ai.head; p; p = p->ai_next) {
    Socket s(::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text();
      continue;
    }
    if (source_ip) {
      AddrInfo src;
      resolve(src, *source_ip, 0, true);
      if (::bind(s.fd(), src.head->ai_addr, src.head->ai_addrlen) != 0) {
        last_error = "bind source " + *source_ip + ": " + errno_text();
        continue;
      }
    }
    int const flags = ::fcntl(s.fd(), F_GETFL);
    ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd(), p->ai_addr, p->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd pfd{s.fd(), POLLOUT, 0};
      if (::poll(&pfd, 1, static_cast<int>(timeout.count())) == 1) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        errno = ETIMEDOUT;
      }
    }
    if (rc != 0) {
      last_error = errno_text();
      continue;
    }
    ::fcntl(s.fd(), F_SETFL, flags);
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
  }
  throw NetError(fmt::format("cannot connect to {}: {}", endpoint.to_string(), last_error));
}

ReadResult read_some(Socket const& s, char* buf, std::size_t len, std::chrono::milliseconds timeout)
{
  pollfd pfd{s.fd(), POLLIN, 0};
  int n;
  do {
    n = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  } while (n < 0 && errno == EINTR);
  if (n == 0)
    return {ReadStatus::Timeout};
  if (n < 0)
    return {ReadStatus::Error};
  auto const r = ::recv(s.fd(), buf, len, 0);
  if (r > 0)
    return {ReadStatus::Data, static_cast<std::size_t>(r)};
  if (r == 0)
    return {ReadStatus::Eof};
  return {ReadStatus::Error};
}

bool write_all(Socket const& s, std::string_view data) noexcept
{
  while (!data.empty()) {
    auto const w = ::send(s.fd(), data.data(), data.size(), MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR)
        continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(w));
  }
  return true;
}

WakePipe::WakePipe()
{
  if (::pipe2(fds_, O_CLOEXEC | O_NONBLOCK) != 0)
    throw NetError("pipe: " + errno_text());
}

WakePipe::~WakePipe()
{
  ::close(fds_[0]);
  ::close(fds_[1]);
}

void WakePipe::notify() noexcept
{
  char const c = 1;
  [[maybe_unused]] auto const r = ::write(fds_[1], &c, 1);
}

LineStream::LineStream(Socket socket, std::chrono::milliseconds timeout)
    : socket_(std::move(socket)), timeout_(timeout)
{
}

void LineStream::fill()
{
  char buf[8192];
  auto const r = read_some(socket_, buf, sizeof buf, timeout_);
  switch (r.status) {
  case ReadStatus::Data:
    buffer_.append(buf, r.bytes);
    bytes_read_ += r.bytes;
    return;
  case ReadStatus::Eof:
    throw NetError("connection closed by peer");
  case ReadStatus::Timeout:
    throw NetError("read timed out");
  case ReadStatus::Error:
    throw NetError("read failed: " + errno_text());
  }
}

std::string LineStream::read_line()
{
  for (;;) {
    auto const eol = buffer_.find('\n');
    if (eol != std::string::npos) {
      auto line = buffer_.substr(0, eol + 1);
      buffer_.erase(0, eol + 1);
      return line;
    }
    fill();
  }
}

std::string LineStream::read_reply()
{
  for (;;) {
    if (auto const n = smtp::complete_reply_length(buffer_); n > 0) {
      auto reply = buffer_.substr(0, n);
      buffer_.erase(0, n);
      return reply;
    }
    fill();
  }
}

void LineStream::write(std::string_view data)
{
  if (!write_all(socket_, data))
    throw NetError("write failed: " + errno_text());
  bytes_written_ += data.size();
}

}  // namespace abl::net
