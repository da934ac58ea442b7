// Scenario-driven language server for exercising the protocol client.
// Speaks Content-Length framed JSON-RPC on stdio. The scenario file maps
// symbol queries and positions to canned answers; flags inject latency and
// mid-session death.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  fs::path scenario;
  fs::path root;
  int delay_ms = 0;
  int delay_after = 0;          // responses sent before delay kicks in
  int exit_after_requests = -1;  // -1 = never
};

std::string to_uri(const fs::path& p) {
  return "file://" + p.generic_string();  // fixture paths need no escaping
}

std::string uri_to_rel(const std::string& uri, const fs::path& root) {
  std::string path = uri;
  if (path.rfind("file://", 0) == 0) path = path.substr(7);
  std::string decoded;
  for (size_t i = 0; i < path.size(); ++i) {
    if (path[i] == '%' && i + 2 < path.size()) {
      decoded += static_cast<char>(std::stoi(path.substr(i + 1, 2), nullptr, 16));
      i += 2;
    } else {
      decoded += path[i];
    }
  }
  return fs::path(decoded).lexically_relative(root).generic_string();
}

bool read_frame(std::string& body) {
  std::string header;
  size_t length = 0;
  for (;;) {
    int c = std::fgetc(stdin);
    if (c == EOF) return false;
    header += static_cast<char>(c);
    if (header.size() >= 4 && header.compare(header.size() - 4, 4, "\r\n\r\n") == 0) break;
  }
  auto pos = header.find("Content-Length:");
  if (pos == std::string::npos) return false;
  length = std::stoul(header.substr(pos + 15));
  body.resize(length);
  return std::fread(body.data(), 1, length, stdin) == length;
}

void write_frame(const json& msg) {
  std::string body = msg.dump();
  std::fprintf(stdout, "Content-Length: %zu\r\n\r\n", body.size());
  std::fwrite(body.data(), 1, body.size(), stdout);
  std::fflush(stdout);
}

json location_json(const fs::path& root, const json& entry) {
  unsigned line = entry.value("line", 0u);
  unsigned character = entry.value("character", 0u);
  return {{"uri", to_uri(root / entry.at("file").get<std::string>())},
          {"range",
           {{"start", {{"line", line}, {"character", character}}},
            {"end", {{"line", line}, {"character", character}}}}}};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    auto next = [&]() -> std::string { return i + 1 < argc ? argv[++i] : ""; };
    if (a == "--scenario") opt.scenario = next();
    else if (a == "--root") opt.root = next();
    else if (a == "--delay-ms") opt.delay_ms = std::stoi(next());
    else if (a == "--delay-after") opt.delay_after = std::stoi(next());
    else if (a == "--exit-after-requests") opt.exit_after_requests = std::stoi(next());
  }
  json scenario = json::object();
  if (!opt.scenario.empty()) {
    std::ifstream in(opt.scenario);
    in >> scenario;
  }
  if (opt.root.empty()) opt.root = fs::current_path();
  opt.root = fs::weakly_canonical(opt.root);

  int responses_sent = 0;
  std::string body;
  while (read_frame(body)) {
    json msg = json::parse(body, nullptr, false);
    if (msg.is_discarded()) continue;
    std::string method = msg.value("method", "");
    if (!msg.contains("id")) {
      if (method == "exit") return 0;
      continue;  // didOpen, initialized, $/...
    }
    if (opt.exit_after_requests >= 0 && responses_sent >= opt.exit_after_requests) return 0;
    if (opt.delay_ms > 0 && responses_sent >= opt.delay_after)
      std::this_thread::sleep_for(std::chrono::milliseconds(opt.delay_ms));

    json result = nullptr;
    if (method == "initialize") {
      result = {{"capabilities", json::object()}};
    } else if (method == "workspace/symbol") {
      std::string query = msg["params"].value("query", "");
      result = json::array();
      if (scenario.contains("symbols") && scenario["symbols"].contains(query)) {
        for (const auto& entry : scenario["symbols"][query]) {
          json info = {{"name", entry.value("name", query)},
                       {"kind", 12},
                       {"location", location_json(opt.root, entry)}};
          std::string container = entry.value("container", "");
          if (!container.empty()) info["containerName"] = container;
          result.push_back(std::move(info));
        }
      }
    } else if (method == "textDocument/definition" || method == "textDocument/declaration" ||
               method == "textDocument/references") {
      std::string table = method.substr(std::string("textDocument/").size());
      std::string rel = uri_to_rel(msg["params"]["textDocument"].value("uri", ""), opt.root);
      unsigned line = msg["params"]["position"].value("line", 0u);
      std::string key = rel + ":" + std::to_string(line);
      result = json::array();
      if (scenario.contains(table) && scenario[table].contains(key))
        for (const auto& entry : scenario[table][key])
          result.push_back(location_json(opt.root, entry));
    } else if (method == "shutdown") {
      result = nullptr;
    }
    write_frame({{"jsonrpc", "2.0"}, {"id", msg["id"]}, {"result", result}});
    ++responses_sent;
  }
  return 0;
}
