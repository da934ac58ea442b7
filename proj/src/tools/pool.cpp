#include "tools/pool.hpp"

#include <algorithm>
#include <chrono>

#include "util/fs.hpp"
#include "util/text.hpp"

namespace ha::tools {
namespace fs = std::filesystem;
using grammar::declarator_name_node;
using grammar::node_type;
using grammar::same_node;
using grammar::start_line;
namespace {

constexpr const char* kToolNames[kToolCount] = {
    "get_definition",       "get_declaration", "get_headers",          "get_cross_references",
    "find_struct_lifecycle", "view_code",       "find_driver_examples",
};

nlohmann::json region_to_json(const grammar::ExtractedRegion& r) {
  return {{"file", r.file},
          {"start_line", r.start_line},
          {"end_line", r.end_line},
          {"complete", r.complete},
          {"text", r.text}};
}

nlohmann::json regions_to_json(const std::vector<grammar::ExtractedRegion>& rs) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rs) arr.push_back(region_to_json(r));
  return arr;
}

std::string require_arg(const ToolRequest& req, const std::string& key) {
  auto it = req.args.find(key);
  if (it == req.args.end() || it->second.empty())
    throw InvalidArgs(std::string(to_string(req.tool)) + ": missing required argument '" + key +
                      "'");
  return it->second;
}

uint32_t require_int_arg(const ToolRequest& req, const std::string& key) {
  std::string raw = require_arg(req, key);
  try {
    long v = std::stol(raw);
    if (v < 1) throw std::out_of_range("non-positive");
    return static_cast<uint32_t>(v);
  } catch (const std::exception&) {
    throw InvalidArgs(std::string(to_string(req.tool)) + ": argument '" + key +
                      "' must be a positive integer, got '" + raw + "'");
  }
}

bool name_has_hint(const std::string& name, const std::vector<std::string>& hints) {
  std::string lower = name;
  for (auto& c : lower) c = static_cast<char>(tolower(static_cast<unsigned char>(c)));
  for (const auto& h : hints)
    if (lower.find(h) != std::string::npos) return true;
  return false;
}

bool mentions_word(std::string_view text, const std::string& word) {
  size_t pos = 0;
  auto is_word = [](char c) {
    return isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  while ((pos = text.find(word, pos)) != std::string_view::npos) {
    bool left_ok = pos == 0 || !is_word(text[pos - 1]);
    size_t after = pos + word.size();
    bool right_ok = after >= text.size() || !is_word(text[after]);
    if (left_ok && right_ok) return true;
    pos = after;
  }
  return false;
}

// One function prototype mentioning the inspected type.
struct SignatureFacts {
  std::string name;
  uint32_t line = 0;
  bool returns_type_pointer = false;
  bool takes_type_pointer = false;  // T* or T** parameter
  bool mentions_type = false;
};

std::optional<SignatureFacts> inspect_declaration(const grammar::SyntaxTree& tree, TSNode decl,
                                                  const std::string& type_name) {
  // Find the function declarator; plain variables are not lifecycle
  // candidates.
  TSNode fn{};
  bool found = false;
  std::vector<TSNode> stack{decl};
  while (!stack.empty()) {
    TSNode n = stack.back();
    stack.pop_back();
    if (node_type(n) == "function_declarator") {
      fn = n;
      found = true;
      break;
    }
    for (uint32_t i = ts_node_named_child_count(n); i > 0; --i)
      stack.push_back(ts_node_named_child(n, i - 1));
  }
  if (!found) return std::nullopt;

  SignatureFacts facts;
  auto name = declarator_name_node(fn);
  if (!name.has_value()) return std::nullopt;
  facts.name = tree.text(*name);
  facts.line = start_line(decl);

  TSNode ret_type = ts_node_child_by_field_name(decl, "type", 4);
  if (!ts_node_is_null(ret_type) && mentions_word(tree.text(ret_type), type_name)) {
    facts.mentions_type = true;
    // Pointer return shows as pointer_declarator wrapping the function
    // declarator.
    for (TSNode a = ts_node_parent(fn); !ts_node_is_null(a) && !same_node(a, decl);
         a = ts_node_parent(a))
      if (node_type(a) == "pointer_declarator") facts.returns_type_pointer = true;
  }

  TSNode params = ts_node_child_by_field_name(fn, "parameters", 10);
  if (!ts_node_is_null(params)) {
    uint32_t count = ts_node_named_child_count(params);
    for (uint32_t i = 0; i < count; ++i) {
      TSNode p = ts_node_named_child(params, i);
      if (node_type(p) != "parameter_declaration") continue;
      std::string_view text = tree.text(p);
      if (!mentions_word(text, type_name)) continue;
      facts.mentions_type = true;
      if (text.find('*') != std::string_view::npos) facts.takes_type_pointer = true;
    }
  }
  return facts;
}

}  // namespace

const char* to_string(Tool t) { return kToolNames[static_cast<size_t>(t)]; }

std::optional<Tool> tool_from_name(const std::string& name) {
  for (size_t i = 0; i < kToolCount; ++i)
    if (name == kToolNames[i]) return static_cast<Tool>(i);
  return std::nullopt;
}

const char* to_string(Backend b) {
  switch (b) {
    case Backend::LSP: return "lsp";
    case Backend::Grammar: return "grammar";
    case Backend::None: return "none";
  }
  return "none";
}

void ToolStats::record(Tool t, Backend backend, bool non_empty) {
  auto& cell = cells_[static_cast<size_t>(t)];
  cell.calls.fetch_add(1, std::memory_order_relaxed);
  if (non_empty) {
    cell.non_empty.fetch_add(1, std::memory_order_relaxed);
    if (backend == Backend::LSP) cell.lsp.fetch_add(1, std::memory_order_relaxed);
    if (backend == Backend::Grammar) cell.grammar.fetch_add(1, std::memory_order_relaxed);
  }
}

ToolCounters ToolStats::get(Tool t) const {
  const auto& cell = cells_[static_cast<size_t>(t)];
  return {cell.calls.load(), cell.non_empty.load(), cell.lsp.load(), cell.grammar.load()};
}

uint64_t ToolStats::total_calls() const {
  uint64_t total = 0;
  for (const auto& cell : cells_) total += cell.calls.load();
  return total;
}

double response_rate(const ToolStats& stats, Tool t) {
  auto c = stats.get(t);
  if (c.calls == 0) return 0.0;
  return static_cast<double>(c.non_empty) / static_cast<double>(c.calls);
}

ToolPool::ToolPool(std::shared_ptr<const grammar::GrammarRetriever> grammar_backend,
                   std::shared_ptr<lsp::LspRetriever> lsp_backend,
                   std::shared_ptr<workspace::ProjectWorkspace> ws, ToolPoolConfig cfg)
    : grammar_(std::move(grammar_backend)),
      lsp_(std::move(lsp_backend)),
      ws_(std::move(ws)),
      cfg_(std::move(cfg)) {}

std::vector<grammar::ExtractedRegion> ToolPool::lsp_regions(const std::string& symbol,
                                                            grammar::Facet facet) {
  std::lock_guard<std::mutex> lock(lsp_mu_);
  return lsp_->retrieve(symbol, facet);
}

std::vector<std::string> ToolPool::lsp_headers(const std::string& symbol) {
  std::lock_guard<std::mutex> lock(lsp_mu_);
  return lsp_->headers_for(symbol);
}

std::vector<grammar::ExtractedRegion> ToolPool::grammar_regions(const std::string& symbol,
                                                                grammar::Facet facet) {
  return grammar_->classify_and_extract(symbol, facet);
}

std::vector<std::string> ToolPool::grammar_headers(const std::string& symbol) {
  return lsp::infer_headers(grammar_regions(symbol, grammar::Facet::Definition),
                            grammar_regions(symbol, grammar::Facet::Declaration),
                            cfg_.header_extensions);
}

ToolResult ToolPool::invoke(const ToolRequest& req) {
  auto t0 = std::chrono::steady_clock::now();
  ToolResult result;

  auto finish = [&](nlohmann::json payload, Backend backend, bool non_empty) {
    result.payload = std::move(payload);
    result.backend_used = non_empty ? backend : Backend::None;
    result.empty = !non_empty;
    result.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    stats_.record(req.tool, result.backend_used, non_empty);
    return result;
  };

  switch (req.tool) {
    case Tool::GetDefinition:
    case Tool::GetDeclaration:
    case Tool::GetCrossReferences: {
      std::string symbol = require_arg(req, "symbol");
      grammar::Facet facet = req.tool == Tool::GetDefinition    ? grammar::Facet::Definition
                             : req.tool == Tool::GetDeclaration ? grammar::Facet::Declaration
                                                                : grammar::Facet::CrossReference;
      std::vector<grammar::ExtractedRegion> regions;
      Backend backend = Backend::None;
      if (lsp_ && lsp_->healthy()) {
        try {
          regions = lsp_regions(symbol, facet);
          if (!regions.empty()) backend = Backend::LSP;
        } catch (const std::exception&) {
          regions.clear();
        }
      }
      if (regions.empty()) {
        try {
          regions = grammar_regions(symbol, facet);
          if (!regions.empty()) backend = Backend::Grammar;
        } catch (const std::exception&) {
          regions.clear();
        }
      }
      if (req.tool == Tool::GetCrossReferences && regions.size() > cfg_.crossref_cap)
        regions.resize(cfg_.crossref_cap);
      return finish(regions_to_json(regions), backend, !regions.empty());
    }

    case Tool::GetHeaders: {
      std::string symbol = require_arg(req, "symbol");
      std::vector<std::string> headers;
      Backend backend = Backend::None;
      if (lsp_ && lsp_->healthy()) {
        try {
          headers = lsp_headers(symbol);
          if (!headers.empty()) backend = Backend::LSP;
        } catch (const std::exception&) {
          headers.clear();
        }
      }
      if (headers.empty()) {
        try {
          headers = grammar_headers(symbol);
          if (!headers.empty()) backend = Backend::Grammar;
        } catch (const std::exception&) {
          headers.clear();
        }
      }
      return finish(nlohmann::json(headers), backend, !headers.empty());
    }

    case Tool::FindStructLifecycle: {
      std::string type_name = require_arg(req, "type");
      try {
        auto report = find_struct_lifecycle(type_name);
        nlohmann::json payload = {{"header", report.header},
                                  {"initializers", regions_to_json(report.initializers)},
                                  {"destructors", regions_to_json(report.destructors)},
                                  {"related", regions_to_json(report.related)}};
        bool non_empty = !report.initializers.empty() || !report.destructors.empty() ||
                         !report.related.empty();
        return finish(std::move(payload), Backend::Grammar, non_empty);
      } catch (const std::exception&) {
        return finish(nlohmann::json::object(), Backend::None, false);
      }
    }

    case Tool::ViewCode: {
      std::string path = require_arg(req, "path");
      uint32_t line = require_int_arg(req, "line");
      uint32_t window = cfg_.view_window;
      if (req.args.count("window")) window = require_int_arg(req, "window");
      try {
        auto region = view_code(path, line, window);
        return finish(region_to_json(region), Backend::Grammar, !region.text.empty());
      } catch (const PathOutsideWorkspace&) {
        throw;  // caller bug, not a backend failure
      } catch (const std::exception&) {
        return finish(nlohmann::json::object(), Backend::None, false);
      }
    }

    case Tool::FindDriverExamples: {
      auto drivers = find_driver_examples();
      auto payload = nlohmann::json::array();
      for (const auto& [path, text] : drivers)
        payload.push_back({{"path", path}, {"text", text}});
      return finish(std::move(payload), Backend::Grammar, !drivers.empty());
    }
  }
  throw InvalidArgs("unknown tool");
}

LifecycleReport ToolPool::find_struct_lifecycle(const std::string& type_name) const {
  auto decls = grammar_->classify_and_extract(type_name, grammar::Facet::Declaration);
  std::string header;
  for (const auto& r : decls) {
    auto ext = fs::path(r.file).extension().string();
    if (std::find(cfg_.header_extensions.begin(), cfg_.header_extensions.end(), ext) !=
        cfg_.header_extensions.end()) {
      header = r.file;
      break;
    }
  }
  if (header.empty())
    throw TypeNotFound("no header declares type '" + type_name + "'");

  LifecycleReport report;
  report.header = header;
  auto tree = grammar_->tree_for(header);
  if (!tree) return report;

  std::vector<TSNode> stack{tree->root()};
  while (!stack.empty()) {
    TSNode n = stack.back();
    stack.pop_back();
    if (node_type(n) == "declaration") {
      auto facts = inspect_declaration(*tree, n, type_name);
      if (facts.has_value() && facts->mentions_type) {
        auto region = grammar_->location_to_region(header, facts->line);
        if (facts->returns_type_pointer ||
            (facts->takes_type_pointer && name_has_hint(facts->name, cfg_.init_name_hints))) {
          report.initializers.push_back(std::move(region));
        } else if (facts->takes_type_pointer &&
                   name_has_hint(facts->name, cfg_.destroy_name_hints)) {
          report.destructors.push_back(std::move(region));
        } else {
          report.related.push_back(std::move(region));
        }
      }
      continue;  // no nested declarations worth visiting
    }
    for (uint32_t i = ts_node_named_child_count(n); i > 0; --i)
      stack.push_back(ts_node_named_child(n, i - 1));
  }
  return report;
}

grammar::ExtractedRegion ToolPool::view_code(const std::string& rel_path, uint32_t line,
                                             uint32_t window) const {
  fs::path root = ws_ ? ws_->root() : grammar_->root();
  fs::path abs = fs::weakly_canonical(root / rel_path);
  if (!util::path_inside(root, abs))
    throw PathOutsideWorkspace("path escapes the workspace: " + rel_path);
  auto content = util::try_read_file(abs);
  if (!content) throw std::runtime_error("unreadable file: " + rel_path);

  uint32_t total = util::count_lines(*content);
  uint32_t half = window / 2;
  grammar::ExtractedRegion r;
  r.file = util::relative_to(root, abs);
  r.start_line = line > half ? line - half : 1;
  r.start_line = std::min(r.start_line, std::max<uint32_t>(total, 1));
  r.end_line = std::min(line + half, std::max<uint32_t>(total, 1));
  r.text = util::slice_lines(*content, r.start_line, r.end_line);
  r.complete = false;
  return r;
}

std::vector<std::pair<std::string, std::string>> ToolPool::find_driver_examples() const {
  std::vector<std::pair<std::string, std::string>> out;
  if (!ws_) return out;
  const std::string marker = "\n[truncated]";
  for (const auto& slot : ws_->discover_harness_slots()) {
    std::string text = slot.original_bytes;
    if (text.size() > cfg_.driver_cap_bytes)
      text = text.substr(0, cfg_.driver_cap_bytes - marker.size()) + marker;
    out.emplace_back(slot.slot_id, std::move(text));
  }
  return out;
}

nlohmann::json ToolPool::registry() {
  auto string_arg = [](const char* desc, bool required) {
    return nlohmann::json{{"type", "string"}, {"description", desc}, {"required", required}};
  };
  auto int_arg = [](const char* desc, bool required) {
    return nlohmann::json{{"type", "integer"}, {"description", desc}, {"required", required}};
  };
  return nlohmann::json::array({
      {{"name", "get_definition"},
       {"description",
        "Full source of the definition of a function or type. Argument is the symbol name, "
        "optionally qualified with :: scopes."},
       {"args", {{"symbol", string_arg("symbol to resolve", true)}}}},
      {{"name", "get_declaration"},
       {"description", "Declaration (prototype) locations and text for a symbol."},
       {"args", {{"symbol", string_arg("symbol to resolve", true)}}}},
      {{"name", "get_headers"},
       {"description",
        "Project header files declaring a symbol; include these to use the symbol."},
       {"args", {{"symbol", string_arg("symbol to resolve", true)}}}},
      {{"name", "get_cross_references"},
       {"description",
        "Existing call sites of a function, each returned as the full calling function."},
       {"args", {{"symbol", string_arg("function to find callers of", true)}}}},
      {{"name", "find_struct_lifecycle"},
       {"description",
        "Constructor/destructor style helpers for a struct or typedef, scanned from the header "
        "that declares it."},
       {"args", {{"type", string_arg("struct or typedef name", true)}}}},
      {{"name", "view_code"},
       {"description", "A window of source lines around a location."},
       {"args",
        {{"path", string_arg("workspace-relative file path", true)},
         {"line", int_arg("1-based line number at the window center", true)},
         {"window", int_arg("window height in lines (default 60)", false)}}}},
      {{"name", "find_driver_examples"},
       {"description",
        "Existing fuzz driver sources in this project, as examples of working setup and "
        "includes."},
       {"args", nlohmann::json::object()}},
  });
}

}  // namespace ha::tools
