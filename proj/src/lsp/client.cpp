#include "lsp/client.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <thread>

#include "util/fs.hpp"
#include "util/text.hpp"

namespace ha::lsp {
namespace fs = std::filesystem;
namespace {

bool uri_unreserved(char c) {
  return isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_' ||
         c == '~' || c == '/';
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string language_id_for(const std::string& rel) {
  auto ext = fs::path(rel).extension().string();
  for (const char* cpp : {".cc", ".cpp", ".cxx", ".hh", ".hpp", ".hxx"})
    if (ext == cpp) return "cpp";
  return "c";
}

// Longest common suffix length of two component lists.
size_t suffix_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  size_t n = 0;
  while (n < a.size() && n < b.size() && a[a.size() - 1 - n] == b[b.size() - 1 - n]) ++n;
  return n;
}

std::optional<std::string> relativize(const fs::path& root, const fs::path& abs) {
  auto rel = abs.lexically_relative(fs::weakly_canonical(root));
  std::string s = rel.generic_string();
  if (s.empty() || s == "." || s.rfind("..", 0) == 0) return std::nullopt;
  return s;
}

}  // namespace

std::string path_to_uri(const fs::path& p) {
  std::string out = "file://";
  for (char c : fs::weakly_canonical(p).generic_string()) {
    if (uri_unreserved(c)) {
      out += c;
    } else {
      char buf[4];
      snprintf(buf, sizeof buf, "%%%02X", static_cast<unsigned char>(c));
      out += buf;
    }
  }
  return out;
}

fs::path uri_to_path(const std::string& uri) {
  std::string rest = uri;
  if (rest.rfind("file://", 0) == 0) rest = rest.substr(7);
  std::string out;
  for (size_t i = 0; i < rest.size(); ++i) {
    if (rest[i] == '%' && i + 2 < rest.size()) {
      int hi = hex_value(rest[i + 1]), lo = hex_value(rest[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += rest[i];
  }
  return out;
}

std::optional<SymbolCandidate> select_candidate(const std::vector<std::string>& query_components,
                                                std::vector<SymbolCandidate> candidates) {
  if (candidates.empty()) return std::nullopt;
  std::vector<std::string> qualifiers = query_components;
  if (!qualifiers.empty()) qualifiers.pop_back();

  auto better = [&](const SymbolCandidate& a, const SymbolCandidate& b) {
    size_t oa = suffix_overlap(qualifiers, a.container_path);
    size_t ob = suffix_overlap(qualifiers, b.container_path);
    if (oa != ob) return oa > ob;
    if (a.container_path.size() != b.container_path.size())
      return a.container_path.size() < b.container_path.size();
    if (a.file != b.file) return a.file < b.file;
    return a.line < b.line;
  };
  return *std::min_element(candidates.begin(), candidates.end(),
                           [&](const auto& a, const auto& b) { return better(a, b); });
}

std::vector<std::string> infer_headers(const std::vector<grammar::ExtractedRegion>& definition_regions,
                                       const std::vector<grammar::ExtractedRegion>& declaration_regions,
                                       const std::vector<std::string>& header_extensions) {
  std::set<std::string> headers;
  auto consider = [&](const grammar::ExtractedRegion& r) {
    auto ext = fs::path(r.file).extension().string();
    for (const auto& h : header_extensions)
      if (ext == h) {
        headers.insert(r.file);
        return;
      }
  };
  for (const auto& r : definition_regions) consider(r);
  for (const auto& r : declaration_regions) consider(r);
  return {headers.begin(), headers.end()};
}

LspClient::LspClient(LspConfig cfg) : cfg_(std::move(cfg)) {}

LspClient::~LspClient() {
  try {
    shutdown();
  } catch (...) {
  }
}

void LspClient::start() {
  rpc_.spawn(cfg_.command, cfg_.root);
  std::string root_uri = path_to_uri(cfg_.root);
  nlohmann::json init_params = {
      {"processId", static_cast<int64_t>(getpid())},
      {"rootUri", root_uri},
      {"capabilities", nlohmann::json::object()},
      {"workspaceFolders",
       nlohmann::json::array(
           {{{"uri", root_uri}, {"name", cfg_.root.filename().string()}}})},
  };
  int64_t id = rpc_.send_request("initialize", std::move(init_params));
  auto resp = rpc_.await_response(id, cfg_.request_timeout_seconds);
  if (resp.contains("error"))
    throw ServerDied("initialize rejected: " + resp["error"].dump());
  rpc_.send_notification("initialized", nlohmann::json::object());

  // Indexing warm-up: a trivial symbol query answered at all means ready.
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::duration<double>(cfg_.warmup_seconds);
  double poll_timeout = std::min(cfg_.request_timeout_seconds, 2.0);
  for (;;) {
    try {
      int64_t probe = rpc_.send_request("workspace/symbol", {{"query", ""}});
      auto r = rpc_.await_response(probe, poll_timeout);
      if (r.contains("result")) break;
    } catch (const ServerUnresponsive&) {
    }
    if (std::chrono::steady_clock::now() >= deadline)
      throw ServerUnresponsive("symbol index warm-up never completed");
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  initialized_ = true;
  degraded_ = false;
  consecutive_failures_ = 0;
}

nlohmann::json LspClient::request(const std::string& method, nlohmann::json params) {
  if (degraded_) throw ServerUnresponsive("session degraded; not retrying");
  if (!initialized_) throw ServerDied("session not initialized");
  try {
    int64_t id = rpc_.send_request(method, std::move(params));
    auto resp = rpc_.await_response(id, cfg_.request_timeout_seconds);
    consecutive_failures_ = 0;
    return resp;
  } catch (const ServerUnresponsive&) {
    if (++consecutive_failures_ >= cfg_.max_consecutive_failures) degraded_ = true;
    throw;
  } catch (const ServerDied&) {
    degraded_ = true;
    throw;
  }
}

std::vector<SymbolCandidate> LspClient::find_candidates(const std::string& qualified_name) {
  auto components = grammar::split_qualified(qualified_name);
  if (components.empty()) return {};
  const std::string& terminal = components.back();

  auto resp = request("workspace/symbol", {{"query", terminal}});
  if (!resp.contains("result") || !resp["result"].is_array()) return {};

  std::vector<SymbolCandidate> out;
  for (const auto& item : resp["result"]) {
    if (!item.contains("name") || item["name"].get<std::string>() != terminal) continue;
    if (!item.contains("location")) continue;
    const auto& loc = item["location"];
    auto rel = relativize(cfg_.root, uri_to_path(loc.value("uri", "")));
    if (!rel.has_value()) continue;

    SymbolCandidate cand;
    cand.name = terminal;
    cand.file = *rel;
    if (item.contains("containerName") && item["containerName"].is_string()) {
      std::string container = item["containerName"].get<std::string>();
      if (!container.empty()) cand.container_path = grammar::split_qualified(container);
    }
    if (loc.contains("range")) {
      cand.line = loc["range"]["start"].value("line", 0u) + 1;
      cand.character = loc["range"]["start"].value("character", 0u);
    }
    out.push_back(std::move(cand));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.file, a.line) < std::tie(b.file, b.line);
  });
  return out;
}

void LspClient::ensure_open(const std::string& rel_file) {
  if (open_files_.count(rel_file)) return;
  auto text = util::try_read_file(cfg_.root / rel_file);
  if (!text.has_value()) return;
  rpc_.send_notification("textDocument/didOpen",
                         {{"textDocument",
                           {{"uri", path_to_uri(cfg_.root / rel_file)},
                            {"languageId", language_id_for(rel_file)},
                            {"version", 1},
                            {"text", *text}}}});
  open_files_.insert(rel_file);
}

std::vector<std::pair<std::string, uint32_t>> LspClient::fetch_facet(
    const SymbolCandidate& candidate, grammar::Facet facet) {
  const char* method = nullptr;
  switch (facet) {
    case grammar::Facet::Definition: method = "textDocument/definition"; break;
    case grammar::Facet::Declaration: method = "textDocument/declaration"; break;
    case grammar::Facet::CrossReference: method = "textDocument/references"; break;
  }
  ensure_open(candidate.file);
  nlohmann::json params = {
      {"textDocument", {{"uri", path_to_uri(cfg_.root / candidate.file)}}},
      {"position", {{"line", candidate.line - 1}, {"character", candidate.character}}},
  };
  if (facet == grammar::Facet::CrossReference)
    params["context"] = {{"includeDeclaration", false}};

  auto resp = request(method, std::move(params));
  if (!resp.contains("result") || resp["result"].is_null()) return {};

  std::set<std::pair<std::string, uint32_t>> locations;
  auto add = [&](const nlohmann::json& entry) {
    std::string uri;
    const nlohmann::json* range = nullptr;
    if (entry.contains("uri")) {
      uri = entry.value("uri", "");
      if (entry.contains("range")) range = &entry["range"];
    } else if (entry.contains("targetUri")) {
      uri = entry.value("targetUri", "");
      if (entry.contains("targetSelectionRange")) range = &entry["targetSelectionRange"];
      else if (entry.contains("targetRange")) range = &entry["targetRange"];
    }
    if (uri.empty() || range == nullptr) return;
    auto rel = relativize(cfg_.root, uri_to_path(uri));
    if (!rel.has_value()) return;  // outside the workspace (system headers)
    locations.emplace(*rel, (*range)["start"].value("line", 0u) + 1);
  };
  const auto& result = resp["result"];
  if (result.is_object()) add(result);
  if (result.is_array())
    for (const auto& entry : result) add(entry);
  return {locations.begin(), locations.end()};
}

void LspClient::shutdown() {
  initialized_ = false;
  if (!rpc_.running()) return;
  try {
    int64_t id = rpc_.send_request("shutdown", nullptr);
    rpc_.await_response(id, 2.0);
  } catch (const std::exception&) {
  }
  try {
    rpc_.send_notification("exit", nlohmann::json::object());
    rpc_.close_input();
  } catch (const std::exception&) {
  }
  for (int i = 0; i < 20 && rpc_.running(); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  if (rpc_.running()) rpc_.kill();
}

void LspClient::kill() {
  rpc_.kill();
  degraded_ = true;
  initialized_ = false;
}

std::vector<grammar::ExtractedRegion> LspRetriever::retrieve(const std::string& qualified_name,
                                                             grammar::Facet facet) {
  auto chosen =
      select_candidate(grammar::split_qualified(qualified_name), client_->find_candidates(qualified_name));
  if (!chosen.has_value()) return {};

  std::vector<grammar::ExtractedRegion> regions;
  std::set<std::pair<std::string, uint32_t>> seen;
  for (const auto& [file, line] : client_->fetch_facet(*chosen, facet)) {
    auto region = regions_->location_to_region(file, line);
    if (seen.emplace(region.file, region.start_line).second) regions.push_back(std::move(region));
  }
  std::sort(regions.begin(), regions.end(), [](const auto& a, const auto& b) {
    return std::tie(a.file, a.start_line) < std::tie(b.file, b.start_line);
  });
  return regions;
}

std::vector<std::string> LspRetriever::headers_for(const std::string& qualified_name) {
  auto defs = retrieve(qualified_name, grammar::Facet::Definition);
  auto decls = retrieve(qualified_name, grammar::Facet::Declaration);
  return infer_headers(defs, decls);
}

}  // namespace ha::lsp
