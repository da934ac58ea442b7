#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "grammar/retriever.hpp"

namespace ha::validation {

/// Per-target-function edge coverage, read from 8-bit sanitizer counters
/// that a linked wrapper zeroes at target entry and snapshots at exit.
struct TargetCoverage {
  std::string function;
  uint64_t entered_total = 0;
  std::set<uint32_t> union_indices;
  std::vector<std::pair<std::string, std::set<uint32_t>>> per_input;
  size_t counters_touched() const { return union_indices.size(); }
};

struct WrapShim {
  std::string target;  // terminal name, also the linker --wrap argument
  std::string source;  // complete C translation unit
};

struct ShimMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Include directive the project itself uses for `header_rel`
/// (longest-suffix match over existing #include lines), falling back to a
/// quoted basename include.
std::string find_include_directive(const std::filesystem::path& root,
                                   const std::string& header_rel);

/// Builds the measurement wrapper source from the target's prototype text.
/// Absent when the prototype cannot be wrapped: parse failure, no matching
/// function declarator, static/inline linkage, variadic or unnamed
/// parameters. C only.
std::optional<WrapShim> generate_wrap_shim(const std::string& decl_text,
                                           const std::string& target_terminal,
                                           const std::vector<std::string>& include_lines);

/// Convenience: resolve the target's declaration through the grammar
/// backend and generate the shim, discovering the include directive from
/// project usage.
std::optional<WrapShim> build_measure_shim(const grammar::GrammarRetriever& retriever,
                                           const std::string& qualified_target);

/// Runs the shim-linked instrumented binary over every corpus input:
/// counters are zeroed at target entry and snapshotted at exit; per-input
/// nonzero indices are unioned into the aggregate.
TargetCoverage measure_target_function_coverage(const std::filesystem::path& instrumented_binary,
                                                const std::filesystem::path& corpus_dir,
                                                const std::string& target,
                                                double timeout_seconds = 120.0);

}  // namespace ha::validation
