#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "util/subprocess.hpp"

namespace ha::lsp {

struct ServerUnresponsive : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServerDied : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Length-prefixed JSON-RPC 2.0 over a child's stdio. One endpoint per
/// server process; request ids strictly increase and are never reused.
class JsonRpcEndpoint {
 public:
  JsonRpcEndpoint() = default;

  void spawn(const std::vector<std::string>& argv,
             const std::optional<std::filesystem::path>& cwd);
  bool running() { return child_.running(); }

  /// Writes the framed request and returns its id.
  int64_t send_request(const std::string& method, nlohmann::json params);
  void send_notification(const std::string& method, nlohmann::json params);

  /// Blocks until the response carrying `id` arrives. Server-to-client
  /// requests get a null-result reply; notifications and stale responses
  /// are dropped. Throws ServerUnresponsive on deadline, ServerDied on EOF
  /// or a broken pipe.
  nlohmann::json await_response(int64_t id, double timeout_seconds);

  void close_input() { child_.close_stdin(); }
  void kill() { child_.kill_hard(); }

 private:
  void write_message(const nlohmann::json& msg);
  /// One framed message off the wire, or nullopt when the deadline passes.
  std::optional<nlohmann::json> read_message(double deadline);

  util::ChildProcess child_;
  std::string inbox_;
  int64_t next_id_ = 1;
};

}  // namespace ha::lsp
