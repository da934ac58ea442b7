#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grammar/retriever.hpp"
#include "lsp/jsonrpc.hpp"

namespace ha::lsp {

struct LspConfig {
  std::vector<std::string> command;  // server argv
  std::filesystem::path root;
  double request_timeout_seconds = 15;
  double warmup_seconds = 60;
  int max_consecutive_failures = 3;
};

struct SymbolCandidate {
  std::string name;
  std::vector<std::string> container_path;  // outermost first
  std::string file;                         // root-relative, forward slashes
  uint32_t line = 1;                        // 1-based
  uint32_t character = 0;                   // 0-based, for follow-up requests
};

std::string path_to_uri(const std::filesystem::path& p);
std::filesystem::path uri_to_path(const std::string& uri);

/// Candidate with the longest common suffix between the query's qualifier
/// components and the candidate's container path. Ties: shortest container
/// path, then lexicographic file, then line. Absent iff candidates is empty.
std::optional<SymbolCandidate> select_candidate(const std::vector<std::string>& query_components,
                                                std::vector<SymbolCandidate> candidates);

/// Unique root-relative paths among the regions' host files that carry a
/// header extension, sorted.
std::vector<std::string> infer_headers(
    const std::vector<grammar::ExtractedRegion>& definition_regions,
    const std::vector<grammar::ExtractedRegion>& declaration_regions,
    const std::vector<std::string>& header_extensions = {".h", ".hh", ".hpp", ".hxx", ".inc"});

/// Drives one language-server process for one workspace. Requests are
/// strictly sequential; ids increase monotonically. After
/// max_consecutive_failures transport failures the session is degraded and
/// every later call fails fast without touching the wire.
class LspClient {
 public:
  explicit LspClient(LspConfig cfg);
  ~LspClient();
  LspClient(const LspClient&) = delete;
  LspClient& operator=(const LspClient&) = delete;

  /// Spawn, initialize handshake, then poll a trivial symbol query until
  /// the server answers (indexing warm-up) or warmup_seconds pass.
  void start();

  bool ready() const { return initialized_ && !degraded_; }
  bool degraded() const { return degraded_; }
  const LspConfig& config() const { return cfg_; }

  /// Workspace symbols whose name equals the query's terminal component.
  std::vector<SymbolCandidate> find_candidates(const std::string& qualified_name);

  /// Definition/declaration/reference locations for the candidate as
  /// (root-relative file, 1-based line), locations outside the root dropped.
  std::vector<std::pair<std::string, uint32_t>> fetch_facet(const SymbolCandidate& candidate,
                                                            grammar::Facet facet);

  /// Protocol shutdown/exit sequence; safe to call repeatedly.
  void shutdown();
  /// Hard kill, bypassing the protocol (tests simulate server loss).
  void kill();

 private:
  nlohmann::json request(const std::string& method, nlohmann::json params);
  void ensure_open(const std::string& rel_file);

  LspConfig cfg_;
  JsonRpcEndpoint rpc_;
  bool initialized_ = false;
  bool degraded_ = false;
  int consecutive_failures_ = 0;
  std::set<std::string> open_files_;
};

/// lsp_retriever facade: candidate selection plus tree-based region
/// extraction (50-line window fallback) on top of the protocol client.
class LspRetriever {
 public:
  LspRetriever(std::shared_ptr<LspClient> client,
               std::shared_ptr<const grammar::GrammarRetriever> regions)
      : client_(std::move(client)), regions_(std::move(regions)) {}

  bool healthy() const { return client_ && client_->ready(); }

  /// Facet regions for the best-overlap candidate, deduplicated by
  /// (file, start line). Throws ServerUnresponsive/ServerDied on transport
  /// failure; returns empty when the server answers with nothing.
  std::vector<grammar::ExtractedRegion> retrieve(const std::string& qualified_name,
                                                 grammar::Facet facet);

  /// Header files hosting the symbol's definition or declaration.
  std::vector<std::string> headers_for(const std::string& qualified_name);

 private:
  std::shared_ptr<LspClient> client_;
  std::shared_ptr<const grammar::GrammarRetriever> regions_;
};

}  // namespace ha::lsp
