#include "lsp/jsonrpc.hpp"

#include <chrono>

namespace ha::lsp {
namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void JsonRpcEndpoint::spawn(const std::vector<std::string>& argv,
                            const std::optional<std::filesystem::path>& cwd) {
  child_.spawn(argv, cwd, std::nullopt);
}

void JsonRpcEndpoint::write_message(const nlohmann::json& msg) {
  std::string body = msg.dump();
  std::string frame = "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body;
  try {
    child_.write_all(frame);
  } catch (const std::exception& e) {
    throw ServerDied(std::string("server stdin closed: ") + e.what());
  }
}

int64_t JsonRpcEndpoint::send_request(const std::string& method, nlohmann::json params) {
  int64_t id = next_id_++;
  write_message({{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", std::move(params)}});
  return id;
}

void JsonRpcEndpoint::send_notification(const std::string& method, nlohmann::json params) {
  write_message({{"jsonrpc", "2.0"}, {"method", method}, {"params", std::move(params)}});
}

std::optional<nlohmann::json> JsonRpcEndpoint::read_message(double deadline) {
  for (;;) {
    // Frame = header block ending in CRLFCRLF, then Content-Length bytes.
    size_t header_end = inbox_.find("\r\n\r\n");
    if (header_end != std::string::npos) {
      size_t length = std::string::npos;
      size_t pos = 0;
      while (pos < header_end) {
        size_t eol = inbox_.find("\r\n", pos);
        if (eol == std::string::npos || eol > header_end) eol = header_end;
        std::string line = inbox_.substr(pos, eol - pos);
        const std::string key = "content-length:";
        std::string lower = line;
        for (auto& c : lower) c = static_cast<char>(tolower(static_cast<unsigned char>(c)));
        if (lower.rfind(key, 0) == 0) {
          try {
            length = std::stoul(line.substr(key.size()));
          } catch (const std::exception&) {
          }
        }
        pos = eol + 2;
      }
      if (length == std::string::npos)
        throw ServerDied("malformed frame: no Content-Length header");
      size_t body_start = header_end + 4;
      if (inbox_.size() >= body_start + length) {
        std::string body = inbox_.substr(body_start, length);
        inbox_.erase(0, body_start + length);
        auto parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded()) throw ServerDied("malformed frame: body is not JSON");
        return parsed;
      }
    }
    double remaining = deadline - now_seconds();
    if (remaining <= 0) return std::nullopt;
    auto chunk = child_.read_some(remaining);
    if (!chunk.has_value()) return std::nullopt;
    if (chunk->empty()) throw ServerDied("server closed its output stream");
    inbox_ += *chunk;
  }
}

nlohmann::json JsonRpcEndpoint::await_response(int64_t id, double timeout_seconds) {
  double deadline = now_seconds() + timeout_seconds;
  for (;;) {
    auto msg = read_message(deadline);
    if (!msg.has_value())
      throw ServerUnresponsive("no response within " + std::to_string(timeout_seconds) + "s");
    if (msg->contains("id") && !msg->contains("method")) {
      if ((*msg)["id"].is_number_integer() && (*msg)["id"].get<int64_t>() == id) return *msg;
      continue;  // stale response to an abandoned request
    }
    if (msg->contains("id") && msg->contains("method")) {
      // Server-to-client request; acknowledge so the server keeps going.
      write_message({{"jsonrpc", "2.0"}, {"id", (*msg)["id"]}, {"result", nullptr}});
      continue;
    }
    // Notification (diagnostics, progress): not our concern.
  }
}

}  // namespace ha::lsp
