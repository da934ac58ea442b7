#pragma once

#include <tree_sitter/api.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ha::grammar {

enum class Language { C, CPP };

/// Language guessed from the file extension; `fallback` decides .h/.inc and
/// anything unrecognized.
Language language_for_path(const std::filesystem::path& p, Language fallback);

/// Immutable parsed file: source bytes plus its concrete syntax tree.
class SyntaxTree {
 public:
  static std::shared_ptr<const SyntaxTree> parse(std::string source, Language lang);
  ~SyntaxTree();
  SyntaxTree(const SyntaxTree&) = delete;
  SyntaxTree& operator=(const SyntaxTree&) = delete;

  TSNode root() const;
  /// True when the tree contains ERROR or MISSING nodes anywhere.
  bool has_errors() const;
  Language language() const { return lang_; }
  const std::string& source() const { return source_; }
  std::string_view text(TSNode n) const;

 private:
  SyntaxTree(std::string source, TSTree* tree, Language lang);
  std::string source_;
  TSTree* tree_;
  Language lang_;
};

// Node positions, 1-based.
uint32_t start_line(TSNode n);
uint32_t end_line(TSNode n);
uint32_t start_column(TSNode n);

bool same_node(TSNode a, TSNode b);
std::string_view node_type(TSNode n);

bool is_function_definition(TSNode n);
bool is_call_expression(TSNode n);
bool is_comment(TSNode n);
bool is_string_like(TSNode n);
bool is_identifier_like(TSNode n);
/// declaration / type_definition / field_declaration / enumerator /
/// preprocessor define.
bool is_declaration_like(TSNode n);
/// struct/class/union/enum specifier.
bool is_record_specifier(TSNode n);
bool record_has_body(TSNode specifier);

/// Terminal name token reached by unwrapping a declarator chain
/// (pointer/function/array declarators, qualified names, templates).
std::optional<TSNode> declarator_name_node(TSNode declarator);
/// Name token of a function definition.
std::optional<TSNode> function_name_node(TSNode function_definition);
/// Terminal name token of a call expression's callee.
std::optional<TSNode> callee_name_node(TSNode call_expression);
/// Every name token a declaration-like node introduces.
std::vector<TSNode> declared_name_nodes(TSNode decl);

/// Smallest named node covering the 1-based (line, column) position.
TSNode descendant_at(const SyntaxTree& t, uint32_t line, uint32_t column);

/// Parse results keyed by (path, content hash, language).
class TreeCache {
 public:
  std::shared_ptr<const SyntaxTree> get(const std::string& path_key, std::string_view content,
                                        Language lang);

 private:
  std::mutex mu_;
  std::map<std::pair<std::string, uint64_t>, std::shared_ptr<const SyntaxTree>> entries_;
};

}  // namespace ha::grammar
