#pragma once

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ha::agent {

struct ChatMessage {
  std::string role;  // system | user | assistant | tool
  std::string content;
  nlohmann::json tool_calls = nlohmann::json::array();  // assistant side
  std::string tool_call_id;                             // tool side
};

struct ToolCallRequest {
  std::string id;
  std::string name;
  nlohmann::json arguments = nlohmann::json::object();
};

/// One model turn: either assistant text, or tool-call requests (text may
/// accompany them but is advisory until the calls are answered).
struct ModelReply {
  std::string text;
  std::vector<ToolCallRequest> tool_calls;
  bool wants_tools() const { return !tool_calls.empty(); }
};

struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual bool supports_tool_calls() const = 0;
  virtual std::string identity() const = 0;
  /// `tools` is the registry schema (may be empty array) and is only
  /// attached when the backend supports tool calls.
  virtual ModelReply complete(const std::vector<ChatMessage>& messages,
                              const nlohmann::json& tools, double temperature) = 0;
};

/// Deterministic backend replaying a fixed reply list; drives tests and
/// transcript replay. When loop_last is set the final reply repeats forever
/// instead of exhausting.
class ScriptedBackend : public ModelBackend {
 public:
  explicit ScriptedBackend(std::vector<ModelReply> replies, bool loop_last = false,
                           bool tool_capable = true)
      : replies_(std::move(replies)), loop_last_(loop_last), tool_capable_(tool_capable) {}

  /// JSON array of replies: {"text": "..."} or
  /// {"tool_calls": [{"name": "...", "arguments": {...}}]}.
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path,
                                                    bool loop_last = false);
  static std::vector<ModelReply> parse_replies(const nlohmann::json& array);

  bool supports_tool_calls() const override { return tool_capable_; }
  std::string identity() const override { return "scripted"; }
  ModelReply complete(const std::vector<ChatMessage>& messages, const nlohmann::json& tools,
                      double temperature) override;

  size_t calls_made() const { return calls_; }

 private:
  std::vector<ModelReply> replies_;
  bool loop_last_;
  bool tool_capable_;
  size_t next_ = 0;
  size_t calls_ = 0;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080/v1
  std::string model;
  std::string api_key;  // empty = no Authorization header
  double timeout_seconds = 120;
  bool tool_capable = true;
};

/// Adapter for chat-completions style HTTP endpoints.
class HttpBackend : public ModelBackend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {}

  bool supports_tool_calls() const override { return cfg_.tool_capable; }
  std::string identity() const override { return cfg_.model; }
  ModelReply complete(const std::vector<ChatMessage>& messages, const nlohmann::json& tools,
                      double temperature) override;

  /// Request body for one completion; exposed for tests.
  nlohmann::json build_request(const std::vector<ChatMessage>& messages,
                               const nlohmann::json& tools, double temperature) const;
  static ModelReply parse_response(const nlohmann::json& body);

 private:
  HttpBackendConfig cfg_;
};

}  // namespace ha::agent
