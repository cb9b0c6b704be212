#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace abl::net {

class NetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  // "host:port" or "[v6]:port".
  static Endpoint parse(std::string_view text);  // throws std::invalid_argument
  std::string to_string() const;
};

// Owning file descriptor.
class Socket {
public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(Socket const&) = delete;
  Socket& operator=(Socket const&) = delete;
  ~Socket() { reset(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void reset() noexcept;

  // Wakes any thread blocked reading this socket.
  void shutdown() noexcept;

private:
  int fd_ = -1;
};

enum class ReadStatus { Data, Eof, Timeout, Error };

struct ReadResult {
  ReadStatus status;
  std::size_t bytes = 0;
};

Socket listen_tcp(Endpoint const& endpoint, int backlog = 512);
std::uint16_t local_port(Socket const& s);
// Peer address and port.
Endpoint peer_endpoint(Socket const& s);

// Blocks until a client connects, `wake_fd` becomes readable, or the timeout
// passes; returns an invalid Socket in the latter two cases.
Socket accept_client(Socket const& listener, int wake_fd, std::chrono::milliseconds timeout);

// Optionally binds the local end to `source_ip` first.
Socket connect_tcp(Endpoint const& endpoint, std::optional<std::string> const& source_ip = std::nullopt,
                   std::chrono::milliseconds timeout = std::chrono::seconds(10));

ReadResult read_some(Socket const& s, char* buf, std::size_t len, std::chrono::milliseconds timeout);
bool write_all(Socket const& s, std::string_view data) noexcept;

// Self-pipe used to interrupt poll() loops.
class WakePipe {
public:
  WakePipe();
  ~WakePipe();
  WakePipe(WakePipe const&) = delete;
  WakePipe& operator=(WakePipe const&) = delete;

  int read_fd() const noexcept { return fds_[0]; }
  void notify() noexcept;

private:
  int fds_[2] = {-1, -1};
};

// Line-buffered client helper used by the admin client and the simulator.
class LineStream {
public:
  explicit LineStream(Socket socket, std::chrono::milliseconds timeout = std::chrono::seconds(30));

  // Returns one line including its terminator; throws NetError on EOF/timeout.
  std::string read_line();
  // Reads one complete SMTP reply (all continuation lines).
  std::string read_reply();
  void write(std::string_view data);

  Socket& socket() noexcept { return socket_; }
  std::size_t bytes_read() const noexcept { return bytes_read_; }
  std::size_t bytes_written() const noexcept { return bytes_written_; }

private:
  void fill();

  Socket socket_;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
  std::size_t bytes_read_ = 0;
  std::size_t bytes_written_ = 0;
};

}  // namespace abl::net
