#include "agent/backend.hpp"

#include <httplib.h>

#include "util/fs.hpp"

namespace ha::agent {

std::vector<ModelReply> ScriptedBackend::parse_replies(const nlohmann::json& array) {
  std::vector<ModelReply> out;
  for (const auto& entry : array) {
    ModelReply reply;
    reply.text = entry.value("text", "");
    if (entry.contains("tool_calls")) {
      int seq = 0;
      for (const auto& call : entry["tool_calls"]) {
        ToolCallRequest req;
        req.id = call.value("id", "call_" + std::to_string(out.size()) + "_" +
                                      std::to_string(seq++));
        req.name = call.value("name", "");
        req.arguments =
            call.contains("arguments") ? call["arguments"] : nlohmann::json::object();
        reply.tool_calls.push_back(std::move(req));
      }
    }
    out.push_back(std::move(reply));
  }
  return out;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path,
                                               bool loop_last) {
  auto parsed = nlohmann::json::parse(util::read_file(path));
  return std::make_shared<ScriptedBackend>(parse_replies(parsed), loop_last);
}

ModelReply ScriptedBackend::complete(const std::vector<ChatMessage>&, const nlohmann::json&,
                                     double) {
  ++calls_;
  if (next_ >= replies_.size()) {
    if (loop_last_ && !replies_.empty()) return replies_.back();
    throw BackendError("scripted backend exhausted after " + std::to_string(replies_.size()) +
                       " replies");
  }
  return replies_[next_++];
}

nlohmann::json HttpBackend::build_request(const std::vector<ChatMessage>& messages,
                                          const nlohmann::json& tools,
                                          double temperature) const {
  nlohmann::json body = {{"model", cfg_.model},
                         {"temperature", temperature},
                         {"messages", nlohmann::json::array()}};
  for (const auto& m : messages) {
    nlohmann::json jm = {{"role", m.role}, {"content", m.content}};
    if (!m.tool_calls.empty()) jm["tool_calls"] = m.tool_calls;
    if (!m.tool_call_id.empty()) jm["tool_call_id"] = m.tool_call_id;
    body["messages"].push_back(std::move(jm));
  }
  if (cfg_.tool_capable && tools.is_array() && !tools.empty()) {
    auto wire = nlohmann::json::array();
    for (const auto& tool : tools) {
      nlohmann::json props = nlohmann::json::object();
      auto required = nlohmann::json::array();
      for (auto it = tool.at("args").begin(); it != tool.at("args").end(); ++it) {
        props[it.key()] = {{"type", it.value().value("type", "string")},
                           {"description", it.value().value("description", "")}};
        if (it.value().value("required", false)) required.push_back(it.key());
      }
      wire.push_back({{"type", "function"},
                      {"function",
                       {{"name", tool.at("name")},
                        {"description", tool.at("description")},
                        {"parameters",
                         {{"type", "object"},
                          {"properties", std::move(props)},
                          {"required", std::move(required)}}}}}});
    }
    body["tools"] = std::move(wire);
  }
  return body;
}

ModelReply HttpBackend::parse_response(const nlohmann::json& body) {
  if (!body.contains("choices") || body["choices"].empty())
    throw BackendError("completion response has no choices: " + body.dump().substr(0, 200));
  const auto& message = body["choices"][0]["message"];
  ModelReply reply;
  if (message.contains("content") && message["content"].is_string())
    reply.text = message["content"].get<std::string>();
  if (message.contains("tool_calls")) {
    for (const auto& call : message["tool_calls"]) {
      ToolCallRequest req;
      req.id = call.value("id", "");
      req.name = call["function"].value("name", "");
      std::string raw_args = call["function"].value("arguments", "{}");
      auto parsed = nlohmann::json::parse(raw_args, nullptr, false);
      req.arguments = parsed.is_discarded() ? nlohmann::json::object() : parsed;
      reply.tool_calls.push_back(std::move(req));
    }
  }
  return reply;
}

ModelReply HttpBackend::complete(const std::vector<ChatMessage>& messages,
                                 const nlohmann::json& tools, double temperature) {
  // Split base_url into host part and path prefix.
  std::string url = cfg_.base_url;
  std::string prefix;
  auto scheme_end = url.find("://");
  auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start != std::string::npos) {
    prefix = url.substr(path_start);
    url = url.substr(0, path_start);
  }
  if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(url);
  client.set_read_timeout(static_cast<time_t>(cfg_.timeout_seconds), 0);
  client.set_connection_timeout(10, 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  auto body = build_request(messages, tools, temperature).dump();
  auto res = client.Post(prefix + "/chat/completions", headers, body, "application/json");
  if (!res) throw BackendError("completion request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendError("completion endpoint returned " + std::to_string(res->status) + ": " +
                       res->body.substr(0, 300));
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) throw BackendError("completion response is not JSON");
  return parse_response(parsed);
}

}  // namespace ha::agent
