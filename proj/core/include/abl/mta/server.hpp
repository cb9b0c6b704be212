#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "abl/blacklist/store.hpp"
#include "abl/classifier.hpp"
#include "abl/mta/admin.hpp"
#include "abl/mta/config.hpp"
#include "abl/mta/driver.hpp"
#include "abl/mta/metrics.hpp"
#include "abl/net.hpp"

namespace abl::mta {

// The ABL-enabled MTA: an SMTP listener with one thread per session, an
// admin listener, and a periodic snapshot writer sharing one store.
class Server {
public:
  explicit Server(ServerConfig config, Clock clock = system_now);
  ~Server();
  Server(Server const&) = delete;
  Server& operator=(Server const&) = delete;

  // Loads an existing snapshot (FormatError / UnsupportedVersion propagate),
  // binds both listeners and starts serving. Port 0 picks a free port.
  void start();

  // Stops accepting, gives in-flight sessions shutdown_grace to finish,
  // closes the rest and writes a final snapshot.
  void stop();

  // Tears everything down without the final snapshot, as a crash would.
  void kill();

  std::uint16_t smtp_port() const noexcept { return smtp_port_; }
  std::uint16_t admin_port() const noexcept { return admin_port_; }
  ServerConfig const& config() const noexcept { return config_; }
  blacklist::AblStore& store() noexcept { return store_; }
  Metrics const& metrics() const noexcept { return metrics_; }
  std::size_t active_sessions() const noexcept { return active_sessions_.load(); }
  std::size_t snapshots_written() const noexcept { return snapshots_written_.load(); }

  // Writes the snapshot (temp file + rename). False with `error` on failure.
  bool snapshot_now(std::string& error);

private:
  void accept_loop();
  void admin_loop();
  void snapshot_loop();
  void run_session(net::Socket socket);
  void run_admin(net::Socket socket);
  void shutdown(bool final_snapshot);
  bool sleep_interruptible(std::chrono::milliseconds delay);

  ServerConfig config_;
  Clock clock_;
  blacklist::AblStore store_;
  classify::Classifier classifier_;
  Metrics metrics_;
  AdminService admin_;

  net::Socket smtp_listener_;
  net::Socket admin_listener_;
  std::uint16_t smtp_port_ = 0;
  std::uint16_t admin_port_ = 0;
  std::unique_ptr<net::WakePipe> wake_;

  std::atomic<bool> stopping_{false};
  std::atomic<bool> started_{false};
  std::atomic<std::size_t> active_sessions_{0};
  std::atomic<std::size_t> snapshots_written_{0};

  std::mutex mutex_;
  std::condition_variable cv_;  // stop requests and worker exits
  std::size_t workers_ = 0;     // session + admin connection threads
  std::set<int> open_fds_;

  std::mutex snapshot_mutex_;

  std::thread accept_thread_;
  std::thread admin_thread_;
  std::thread snapshot_thread_;
};

// Runs a server until SIGINT or SIGTERM. Returns the process exit status.
int serve(ServerConfig const& config);

}  // namespace abl::mta
