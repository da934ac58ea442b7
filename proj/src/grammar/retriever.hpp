#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grammar/syntax_tree.hpp"

namespace ha::grammar {

struct Occurrence {
  std::string file;  // workspace-root-relative, forward slashes
  uint32_t line = 0;
  uint32_t column = 0;
  enum class KindHint { Unknown, Definition, Declaration, Reference };
  KindHint kind_hint = KindHint::Unknown;
};

struct ExtractedRegion {
  std::string file;  // workspace-root-relative, forward slashes
  uint32_t start_line = 0;
  uint32_t end_line = 0;  // inclusive
  std::string text;       // full source lines start_line..end_line
  bool complete = true;   // false only for the fallback line window
};

enum class Facet { Definition, Declaration, CrossReference };

struct RetrieverOptions {
  Language default_language = Language::C;
  std::vector<std::string> source_extensions = {".c",  ".cc",  ".cpp", ".cxx", ".h",
                                                ".hh", ".hpp", ".hxx", ".inc"};
  std::vector<std::string> deny_dirs = {".git", ".hg",        ".svn",         "build", "out",
                                        "bak",  "third_party", "node_modules", "corpus"};
};

/// "foo" -> {foo}; "ns::util::clamp" -> {ns, util, clamp}.
std::vector<std::string> split_qualified(const std::string& symbol);

/// Parse-based symbol resolution over a project tree. Robust to files that
/// do not compile; scans occurrences textually and confirms them on the
/// concrete syntax tree.
class GrammarRetriever {
 public:
  explicit GrammarRetriever(std::filesystem::path root, RetrieverOptions opts = {});

  const std::filesystem::path& root() const { return root_; }

  /// Every word-boundary occurrence of the symbol's terminal component in
  /// source files under the root, ordered by (path, line, column).
  std::vector<Occurrence> locate_occurrences(const std::string& symbol) const;

  /// Tree-confirmed regions for the requested facet, de-duplicated by
  /// (file, start_line) and sorted. CrossReference yields the full body of
  /// each calling function.
  std::vector<ExtractedRegion> classify_and_extract(const std::string& symbol, Facet facet) const;

  /// Smallest function definition containing the line, or absent.
  std::optional<ExtractedRegion> enclosing_function(const std::filesystem::path& file,
                                                    uint32_t line) const;

  /// Whole enclosing definition/declaration node when the file parses
  /// cleanly; otherwise a 50-line window starting at `line`, complete=false.
  ExtractedRegion location_to_region(const std::filesystem::path& file, uint32_t line) const;

  /// Cached parse of a file (relative paths resolve against the root).
  /// Null when the file is unreadable or the backend yields no tree.
  std::shared_ptr<const SyntaxTree> tree_for(const std::filesystem::path& file) const;

  uint64_t parse_failures() const { return parse_failures_.load(); }

 private:
  std::filesystem::path resolve(const std::filesystem::path& file) const;

  std::filesystem::path root_;
  RetrieverOptions opts_;
  mutable TreeCache cache_;
  mutable std::atomic<uint64_t> parse_failures_{0};
};

}  // namespace ha::grammar
