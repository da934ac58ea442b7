#pragma once

#include <chrono>
#include <fstream>
#include <memory>
#include <optional>

#include "agent/backend.hpp"
#include "agent/prompts.hpp"
#include "agent/transcript.hpp"
#include "grammar/retriever.hpp"
#include "tools/pool.hpp"
#include "triage/triage.hpp"
#include "validation/validator.hpp"
#include "workspace/workspace.hpp"

namespace ha::agent {

struct Budgets {
  int attempts = 3;
  int fixes_per_attempt = 5;
  int tool_calls_per_attempt = 25;
};

struct SessionConfig {
  std::string target;  // qualified function name
  grammar::Language language = grammar::Language::C;
  Budgets budgets;
  double fuzz_seconds = 60;
  uint32_t fuzz_seed = 1;
  int usage_example_count = 2;  // callers quoted in the generation prompt
  std::string session_id = "session";
  std::optional<std::filesystem::path> transcript_path;  // eager JSONL flush
};

struct SessionResult {
  Outcome outcome = Outcome::BudgetExhausted;
  int success_attempt = 0;  // 1-based; 0 = none
  int model_calls = 0;
  int tool_calls = 0;
  std::string final_harness;  // last harness tried; the winner on Success
  std::string slot_id;
  std::optional<validation::ValidationVerdict> verdict;  // last one recorded
  SessionTranscript transcript;
};

struct SessionSetupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One target, one workspace clone: generate, build, triage, fix, validate
/// until success or budgets run out.
class Orchestrator {
 public:
  Orchestrator(std::shared_ptr<workspace::ProjectWorkspace> ws,
               std::shared_ptr<tools::ToolPool> pool,
               std::shared_ptr<const grammar::GrammarRetriever> grammar_backend,
               std::shared_ptr<ModelBackend> backend, SessionConfig cfg);

  SessionResult run_session();

 private:
  struct AttemptBudget {
    int completions_left;  // 1 + fixes_per_attempt
    int tool_calls_left;
  };

  GenerationContext gather_context();
  tools::ToolResult call_tool(tools::Tool tool, std::map<std::string, std::string> args);
  /// Runs completions (and any tool-call rounds) until the model produces a
  /// harness or the attempt's budgets are gone.
  std::optional<std::string> obtain_harness(const PromptBundle& bundle, AttemptBudget& budget,
                                            const std::string& phase);
  ModelReply complete_once(std::vector<ChatMessage>& messages, const nlohmann::json& tools,
                           double temperature);
  nlohmann::json dispatch_tool(const ToolCallRequest& call);
  PromptBundle compile_fix_bundle(const std::string& harness, const std::string& log,
                                  const triage::TriageAction& action, triage::ErrorClass overall,
                                  bool attach_drivers, const GenerationContext& ctx,
                                  const nlohmann::json& tools);
  PromptBundle validation_fix_bundle(const std::string& harness,
                                     const validation::ValidationVerdict& v,
                                     const nlohmann::json& tools);
  std::vector<std::string> snippets_for(const std::vector<triage::Diagnostic>& diags) const;
  nlohmann::json verdict_json(const validation::ValidationVerdict& v) const;
  std::optional<std::string> find_decl_header(const std::string& symbol) const;
  const workspace::HarnessSlot& slot_by_id(const std::string& slot_id) const;
  void record(const std::string& kind, nlohmann::json data);
  void flush_line(const nlohmann::json& line);

  std::shared_ptr<workspace::ProjectWorkspace> ws_;
  std::shared_ptr<tools::ToolPool> pool_;
  std::shared_ptr<const grammar::GrammarRetriever> grammar_;
  std::shared_ptr<ModelBackend> backend_;
  SessionConfig cfg_;
  triage::PatternTable table_;

  std::vector<workspace::HarnessSlot> slots_;
  triage::AttemptState triage_state_;
  util::EnvMap session_env_;
  SessionTranscript transcript_;
  std::optional<std::ofstream> sink_;
  std::chrono::steady_clock::time_point t0_;
  int attempt_ = 0;
  int64_t tool_seq_ = 0;
};

}  // namespace ha::agent
