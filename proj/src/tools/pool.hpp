#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grammar/retriever.hpp"
#include "lsp/client.hpp"
#include "workspace/workspace.hpp"

namespace ha::tools {

enum class Tool {
  GetDefinition,
  GetDeclaration,
  GetHeaders,
  GetCrossReferences,
  FindStructLifecycle,
  ViewCode,
  FindDriverExamples,
};
inline constexpr size_t kToolCount = 7;

const char* to_string(Tool t);
std::optional<Tool> tool_from_name(const std::string& name);

enum class Backend { LSP, Grammar, None };
const char* to_string(Backend b);

struct ToolRequest {
  Tool tool = Tool::GetDefinition;
  std::map<std::string, std::string> args;
  std::string session_id;
  int64_t seq = 0;
};

struct ToolResult {
  nlohmann::json payload;  // shape fixed per tool; see registry()
  Backend backend_used = Backend::None;
  bool empty = true;
  double latency_ms = 0;
};

struct InvalidArgs : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct TypeNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PathOutsideWorkspace : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ToolCounters {
  uint64_t calls = 0;
  uint64_t non_empty = 0;
  uint64_t lsp_answered = 0;
  uint64_t grammar_answered = 0;
};

class ToolStats {
 public:
  void record(Tool t, Backend backend, bool non_empty);
  ToolCounters get(Tool t) const;
  uint64_t total_calls() const;

 private:
  struct Cell {
    std::atomic<uint64_t> calls{0};
    std::atomic<uint64_t> non_empty{0};
    std::atomic<uint64_t> lsp{0};
    std::atomic<uint64_t> grammar{0};
  };
  std::array<Cell, kToolCount> cells_;
};

/// non_empty / calls; 0 when the tool was never called.
double response_rate(const ToolStats& stats, Tool t);

struct LifecycleReport {
  std::string header;  // root-relative host of the type declaration
  std::vector<grammar::ExtractedRegion> initializers;
  std::vector<grammar::ExtractedRegion> destructors;
  std::vector<grammar::ExtractedRegion> related;
};

struct ToolPoolConfig {
  size_t driver_cap_bytes = 16 * 1024;
  uint32_t view_window = 60;
  size_t crossref_cap = 5;
  std::vector<std::string> init_name_hints = {"create", "new", "init", "alloc", "open"};
  std::vector<std::string> destroy_name_hints = {"destroy", "free",    "close",
                                                 "detach",  "release", "fini"};
  std::vector<std::string> header_extensions = {".h", ".hh", ".hpp", ".hxx", ".inc"};
};

/// The seven-tool facade the agent calls. Symbol tools go to the language
/// server first and fall back to the grammar backend; the rest are served
/// by the grammar/workspace layer directly. Backend errors never surface:
/// they become empty results with backend_used=None.
class ToolPool {
 public:
  ToolPool(std::shared_ptr<const grammar::GrammarRetriever> grammar_backend,
           std::shared_ptr<lsp::LspRetriever> lsp_backend,  // may be null
           std::shared_ptr<workspace::ProjectWorkspace> ws, ToolPoolConfig cfg = {});

  /// Throws InvalidArgs on schema violations; everything else is absorbed.
  ToolResult invoke(const ToolRequest& req);

  const ToolStats& stats() const { return stats_; }
  const ToolPoolConfig& config() const { return cfg_; }

  /// Machine-readable tool schemas for the model's function-calling layer.
  static nlohmann::json registry();

  LifecycleReport find_struct_lifecycle(const std::string& type_name) const;
  grammar::ExtractedRegion view_code(const std::string& rel_path, uint32_t line,
                                     uint32_t window) const;
  std::vector<std::pair<std::string, std::string>> find_driver_examples() const;

 private:
  std::vector<grammar::ExtractedRegion> lsp_regions(const std::string& symbol,
                                                    grammar::Facet facet);
  std::vector<std::string> lsp_headers(const std::string& symbol);
  std::vector<grammar::ExtractedRegion> grammar_regions(const std::string& symbol,
                                                        grammar::Facet facet);
  std::vector<std::string> grammar_headers(const std::string& symbol);

  std::shared_ptr<const grammar::GrammarRetriever> grammar_;
  std::shared_ptr<lsp::LspRetriever> lsp_;
  std::shared_ptr<workspace::ProjectWorkspace> ws_;
  ToolPoolConfig cfg_;
  ToolStats stats_;
  std::mutex lsp_mu_;
};

}  // namespace ha::tools
