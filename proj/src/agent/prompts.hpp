#pragma once

#include <string>
#include <utility>
#include <vector>

#include "agent/backend.hpp"
#include "grammar/syntax_tree.hpp"
#include "validation/fuzzing.hpp"

namespace ha::agent {

struct PromptBundle {
  std::vector<ChatMessage> messages;
  nlohmann::json tools = nlohmann::json::array();
  double temperature = 1.0;
};

/// Everything gathered up front about the target function and its project.
struct GenerationContext {
  std::string declaration_text;  // empty = not found, noted in the prompt
  std::string definition_text;
  std::string documentation;
  std::vector<std::string> headers;  // project-relative header paths
  std::vector<std::pair<std::string, std::string>> driver_examples;  // path, text
  std::vector<std::string> usage_snippets;  // caller bodies
};

/// Material for one repair round; populate what applies.
struct FixContext {
  std::string harness_text;
  std::string summary;                    // one-sentence error description
  std::vector<std::string> error_lines;   // minimized compile errors, verbatim
  std::string crash_kind;                 // fuzz failures
  std::vector<validation::CrashFrame> crash_frames;
  std::vector<std::string> source_snippets;  // retrieved context
  std::vector<std::pair<std::string, std::string>> driver_examples;
  std::string instruction;  // closing task line; default applied when empty
};

/// Four sections: task description, header files, examples, target function
/// information. Tool schemas attach only when the backend supports them.
PromptBundle assemble_generation_prompt(const std::string& target, grammar::Language language,
                                        const GenerationContext& ctx,
                                        const nlohmann::json& tools);

/// Four sections: task description, driver code, error messages, source
/// code information.
PromptBundle assemble_fix_prompt(grammar::Language language, const FixContext& ctx,
                                 const nlohmann::json& tools);

/// Matched error lines plus one following context line each, de-duplicated
/// with repeat counts, capped.
std::vector<std::string> minimize_errors(const std::string& log_text, size_t cap_lines = 30);

struct NoCodeBlock : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The last C/C++-tagged fenced block; otherwise the longest untagged
/// block; otherwise the longest block of any tag. Throws NoCodeBlock.
std::string extract_harness(const std::string& reply_text);

}  // namespace ha::agent
