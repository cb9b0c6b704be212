#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abl/blacklist/store.hpp"
#include "abl/mta/driver.hpp"
#include "abl/mta/metrics.hpp"
#include "abl/net.hpp"

namespace abl::mta {

struct AdminResponse {
  std::vector<std::string> lines;
  std::optional<std::string> error;  // set for ERR
  bool close = false;

  bool ok() const noexcept { return !error.has_value(); }
  // Data lines, then `OK` or `ERR <message>`, each LF-terminated.
  std::string render() const;
};

// Parses a rendered response (the inverse of render()) for clients.
// Returns nullopt until `buffer` holds the terminating OK/ERR line.
std::optional<AdminResponse> parse_admin_response(std::string_view buffer, std::size_t* consumed = nullptr);

// Commands: STATS, BL LIST, BL ADD <ip> <sender-or--> <reason...>,
// BL DEL <ip> <sender-or-->, EXPIRE, SNAPSHOT, QUIT.
class AdminService {
public:
  using SnapshotFn = std::function<bool(std::string& error)>;

  AdminService(blacklist::AblStore& store, Metrics const& metrics, Clock clock, SnapshotFn snapshot);

  AdminResponse handle(std::string_view line);

private:
  blacklist::AblStore& store_;
  Metrics const& metrics_;
  Clock clock_;
  SnapshotFn snapshot_;
};

// Connects, sends one command, returns the parsed response.
// Throws net::NetError when the admin port cannot be reached.
AdminResponse admin_request(net::Endpoint const& endpoint, std::string_view command,
                            std::chrono::milliseconds timeout = std::chrono::seconds(10));

}  // namespace abl::mta
