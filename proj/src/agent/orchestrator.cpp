#include "agent/orchestrator.hpp"

#include <algorithm>
#include <set>

#include "util/fs.hpp"
#include "util/text.hpp"

namespace ha::agent {
namespace {

// Hard cap on build/triage rounds per attempt. Every productive path is
// budget-bounded already; this guards against planner bugs only.
constexpr int kRoundCap = 50;

std::string scalar_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

nlohmann::json messages_json(const std::vector<ChatMessage>& ms) {
  auto arr = nlohmann::json::array();
  for (const auto& m : ms) {
    nlohmann::json o = {{"role", m.role}, {"content", m.content}};
    if (!m.tool_calls.empty()) o["tool_calls"] = m.tool_calls;
    if (!m.tool_call_id.empty()) o["tool_call_id"] = m.tool_call_id;
    arr.push_back(std::move(o));
  }
  return arr;
}

nlohmann::json calls_json(const std::vector<ToolCallRequest>& calls) {
  auto arr = nlohmann::json::array();
  for (const auto& c : calls)
    arr.push_back({{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}});
  return arr;
}

std::string log_tail(const std::string& log, size_t cap = 2000) {
  return log.size() > cap ? log.substr(log.size() - cap) : log;
}

/// Contiguous comment lines immediately above a 1-based source line.
std::string leading_comment(const std::filesystem::path& root, const std::string& rel,
                            uint32_t start_line) {
  auto text = util::try_read_file(root / rel);
  if (!text) return "";
  auto lines = util::split_lines(*text);
  if (start_line < 2 || start_line > lines.size() + 1) return "";
  std::vector<std::string> collected;
  for (size_t i = start_line - 1; i-- > 0;) {
    auto t = util::trim(lines[i]);
    if (t.empty()) break;
    bool opener = t.rfind("/*", 0) == 0;
    bool commentish = opener || t.rfind("//", 0) == 0 || t.rfind("*", 0) == 0 ||
                      (t.size() >= 2 && t.substr(t.size() - 2) == "*/");
    if (!commentish) break;
    collected.emplace_back(lines[i]);
    if (opener) break;
  }
  std::reverse(collected.begin(), collected.end());
  std::string out;
  for (const auto& l : collected) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string first_region_text(const tools::ToolResult& r) {
  if (r.empty || !r.payload.is_array() || r.payload.empty()) return "";
  return r.payload.at(0).value("text", "");
}

}  // namespace

Orchestrator::Orchestrator(std::shared_ptr<workspace::ProjectWorkspace> ws,
                           std::shared_ptr<tools::ToolPool> pool,
                           std::shared_ptr<const grammar::GrammarRetriever> grammar_backend,
                           std::shared_ptr<ModelBackend> backend, SessionConfig cfg)
    : ws_(std::move(ws)),
      pool_(std::move(pool)),
      grammar_(std::move(grammar_backend)),
      backend_(std::move(backend)),
      cfg_(std::move(cfg)),
      table_(triage::PatternTable::load_default()) {}

void Orchestrator::record(const std::string& kind, nlohmann::json data) {
  TranscriptEvent e;
  e.attempt = attempt_;
  e.kind = kind;
  e.data = std::move(data);
  e.t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  if (sink_) flush_line(SessionTranscript::event_json(e));
  transcript_.events.push_back(std::move(e));
}

void Orchestrator::flush_line(const nlohmann::json& line) {
  if (!sink_) return;
  *sink_ << line.dump() << '\n';
  sink_->flush();
}

const workspace::HarnessSlot& Orchestrator::slot_by_id(const std::string& slot_id) const {
  for (const auto& s : slots_)
    if (s.slot_id == slot_id) return s;
  throw std::logic_error("unknown harness slot: " + slot_id);
}

std::optional<std::string> Orchestrator::find_decl_header(const std::string& symbol) const {
  try {
    auto regions = grammar_->classify_and_extract(symbol, grammar::Facet::Declaration);
    for (const auto& r : regions) {
      auto ext = std::filesystem::path(r.file).extension().string();
      const auto& known = pool_->config().header_extensions;
      if (std::find(known.begin(), known.end(), ext) != known.end()) return r.file;
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

tools::ToolResult Orchestrator::call_tool(tools::Tool tool,
                                          std::map<std::string, std::string> args) {
  tools::ToolRequest req;
  req.tool = tool;
  req.args = std::move(args);
  req.session_id = cfg_.session_id;
  req.seq = ++tool_seq_;
  return pool_->invoke(req);
}

GenerationContext Orchestrator::gather_context() {
  GenerationContext ctx;

  auto decl = call_tool(tools::Tool::GetDeclaration, {{"symbol", cfg_.target}});
  ctx.declaration_text = first_region_text(decl);

  auto def = call_tool(tools::Tool::GetDefinition, {{"symbol", cfg_.target}});
  ctx.definition_text = first_region_text(def);
  for (const auto* facet : {&def, &decl}) {
    if (!ctx.documentation.empty()) break;
    if (facet->empty || !facet->payload.is_array() || facet->payload.empty()) continue;
    const auto& r0 = facet->payload.at(0);
    ctx.documentation =
        leading_comment(ws_->root(), r0.value("file", ""), r0.value("start_line", 0));
  }

  auto hdrs = call_tool(tools::Tool::GetHeaders, {{"symbol", cfg_.target}});
  if (!hdrs.empty && hdrs.payload.is_array())
    for (const auto& h : hdrs.payload) ctx.headers.push_back(h.get<std::string>());

  auto refs = call_tool(tools::Tool::GetCrossReferences, {{"symbol", cfg_.target}});
  if (!refs.empty && refs.payload.is_array()) {
    size_t cap = std::min(refs.payload.size(),
                          static_cast<size_t>(std::max(0, cfg_.usage_example_count)));
    for (size_t i = 0; i < cap; ++i)
      ctx.usage_snippets.push_back(refs.payload.at(i).value("text", ""));
  }

  auto drivers = call_tool(tools::Tool::FindDriverExamples, {});
  if (!drivers.empty && drivers.payload.is_array())
    for (const auto& d : drivers.payload)
      ctx.driver_examples.emplace_back(d.value("path", ""), d.value("text", ""));

  auto driver_paths = nlohmann::json::array();
  for (const auto& [path, text] : ctx.driver_examples) driver_paths.push_back(path);
  record("context", {{"declaration_found", !ctx.declaration_text.empty()},
                     {"definition_found", !ctx.definition_text.empty()},
                     {"documentation_found", !ctx.documentation.empty()},
                     {"headers", ctx.headers},
                     {"usage_count", ctx.usage_snippets.size()},
                     {"drivers", driver_paths}});
  return ctx;
}

ModelReply Orchestrator::complete_once(std::vector<ChatMessage>& messages,
                                       const nlohmann::json& tools, double temperature) {
  auto reply = backend_->complete(messages, tools, temperature);
  ++transcript_.model_calls;
  record("reply", {{"text", reply.text}, {"tool_calls", calls_json(reply.tool_calls)}});
  if (!reply.wants_tools()) {
    // Keep the conversation coherent for a potential re-prompt.
    ChatMessage assistant;
    assistant.role = "assistant";
    assistant.content = reply.text;
    messages.push_back(std::move(assistant));
  }
  return reply;
}

nlohmann::json Orchestrator::dispatch_tool(const ToolCallRequest& call) {
  auto tool = tools::tool_from_name(call.name);
  if (!tool) {
    nlohmann::json err = {{"error", "unknown tool: " + call.name}};
    record("tool_result", {{"id", call.id}, {"error", err["error"]}});
    return err;
  }
  std::map<std::string, std::string> args;
  if (call.arguments.is_object())
    for (const auto& [k, v] : call.arguments.items()) args[k] = scalar_to_string(v);
  try {
    auto res = call_tool(*tool, std::move(args));
    record("tool_result", {{"id", call.id},
                           {"backend", tools::to_string(res.backend_used)},
                           {"empty", res.empty},
                           {"result", res.payload},
                           {"latency_ms", res.latency_ms}});
    return {{"tool", call.name},
            {"result", res.payload},
            {"backend", tools::to_string(res.backend_used)},
            {"empty", res.empty}};
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", e.what()}};
    record("tool_result", {{"id", call.id}, {"error", err["error"]}});
    return err;
  }
}

std::optional<std::string> Orchestrator::obtain_harness(const PromptBundle& bundle,
                                                        AttemptBudget& budget,
                                                        const std::string& phase) {
  auto messages = bundle.messages;
  record("prompt", {{"phase", phase}, {"messages", messages_json(messages)}});
  bool reprompted = false;
  bool charge = true;
  while (true) {
    if (charge) {
      if (budget.completions_left <= 0) {
        record("budget_stop", {{"phase", phase}, {"exhausted", "completions"}});
        return std::nullopt;
      }
      --budget.completions_left;
    }
    charge = true;

    ModelReply reply;
    try {
      reply = complete_once(messages, bundle.tools, bundle.temperature);
    } catch (const BackendError& e) {
      record("backend_error", {{"phase", phase}, {"what", e.what()}});
      return std::nullopt;
    }

    if (reply.wants_tools()) {
      ChatMessage assistant;
      assistant.role = "assistant";
      assistant.content = reply.text;
      assistant.tool_calls = calls_json(reply.tool_calls);
      messages.push_back(std::move(assistant));

      bool dispatched = false;
      for (const auto& call : reply.tool_calls) {
        ChatMessage answer;
        answer.role = "tool";
        answer.tool_call_id = call.id;
        if (budget.tool_calls_left <= 0) {
          record("tool_call", {{"id", call.id},
                               {"name", call.name},
                               {"arguments", call.arguments},
                               {"dispatched", false}});
          nlohmann::json err = {
              {"error", "tool-call budget exhausted; reply with the final driver"}};
          record("tool_result", {{"id", call.id}, {"error", err["error"]}});
          answer.content = err.dump();
        } else {
          --budget.tool_calls_left;
          ++transcript_.tool_calls;
          dispatched = true;
          record("tool_call", {{"id", call.id},
                               {"name", call.name},
                               {"arguments", call.arguments},
                               {"dispatched", true}});
          answer.content = dispatch_tool(call).dump();
        }
        messages.push_back(std::move(answer));
      }
      // A completion that follows real tool work is paid for by the tool
      // budget; the grace completion after refusals is charged normally.
      charge = !dispatched;
      continue;
    }

    try {
      return extract_harness(reply.text);
    } catch (const NoCodeBlock&) {
      record("no_code_block", {{"phase", phase}, {"reprompt", !reprompted}});
      if (reprompted) return std::nullopt;
      reprompted = true;
      messages.push_back({"user",
                          "Your reply contained no code block. Reply with the complete driver "
                          "in a single fenced code block and nothing else."});
    }
  }
}

std::vector<std::string> Orchestrator::snippets_for(
    const std::vector<triage::Diagnostic>& diags) const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& d : diags) {
    if (!d.symbol || !seen.insert(*d.symbol).second) continue;
    try {
      auto regions = grammar_->classify_and_extract(*d.symbol, grammar::Facet::Declaration);
      if (regions.empty())
        regions = grammar_->classify_and_extract(*d.symbol, grammar::Facet::Definition);
      if (regions.empty()) continue;
      out.push_back("// " + regions[0].file + ":" + std::to_string(regions[0].start_line) + "\n" +
                    regions[0].text);
    } catch (const std::exception&) {
    }
    if (out.size() >= 3) break;
  }
  return out;
}

PromptBundle Orchestrator::compile_fix_bundle(const std::string& harness, const std::string& log,
                                              const triage::TriageAction& action,
                                              triage::ErrorClass overall, bool attach_drivers,
                                              const GenerationContext& ctx,
                                              const nlohmann::json& tools) {
  FixContext fc;
  fc.harness_text = harness;
  fc.summary = "The driver failed to compile (" + triage::to_string(overall) + ").";
  if (!action.hint.empty()) fc.summary += " " + action.hint;
  fc.error_lines = minimize_errors(log);
  fc.source_snippets = snippets_for(action.diagnostics);
  if (attach_drivers) fc.driver_examples = ctx.driver_examples;
  return assemble_fix_prompt(cfg_.language, fc, tools);
}

PromptBundle Orchestrator::validation_fix_bundle(const std::string& harness,
                                                 const validation::ValidationVerdict& v,
                                                 const nlohmann::json& tools) {
  FixContext fc;
  fc.harness_text = harness;
  if (!v.fake_check.pass) {
    fc.summary =
        "The driver defines the target function itself; it must call the project "
        "implementation instead.";
    if (!v.fake_check.evidence.empty()) fc.source_snippets.push_back(v.fake_check.evidence);
    fc.instruction = "Delete the local definition of `" + cfg_.target +
                     "`, include the project header that declares it, and call the real "
                     "implementation. Reply with the complete corrected driver in a single "
                     "fenced code block.";
  } else if (!v.call_check.pass) {
    fc.summary = "The driver never calls the target function `" + cfg_.target + "`.";
    fc.instruction = "Call `" + cfg_.target +
                     "` with inputs derived from the fuzz data. Reply with the complete "
                     "corrected driver in a single fenced code block.";
  } else if (!v.fuzz_pass) {
    fc.summary = "The driver crashed during a short fuzzing run.";
    if (v.fuzz_report) {
      fc.crash_kind = v.fuzz_report->crash_kind.value_or("abnormal exit");
      fc.crash_frames = v.fuzz_report->crash_stack;
    }
  } else {
    fc.summary =
        "Short fuzzing produced no coverage growth; the driver likely feeds the target a "
        "fixed or trivially rejected input.";
  }
  return assemble_fix_prompt(cfg_.language, fc, tools);
}

nlohmann::json Orchestrator::verdict_json(const validation::ValidationVerdict& v) const {
  nlohmann::json j = {{"fake_pass", v.fake_check.pass}, {"call_pass", v.call_check.pass},
                      {"fuzz_pass", v.fuzz_pass},       {"coverage_pass", v.coverage_pass},
                      {"overall", v.overall},           {"skipped", v.skipped}};
  if (v.fuzz_report) {
    j["crashed"] = v.fuzz_report->crashed;
    if (v.fuzz_report->crash_kind) j["crash_kind"] = *v.fuzz_report->crash_kind;
    j["category"] =
        validation::to_string(validation::categorize_outcome(*v.fuzz_report, std::nullopt));
    j["executions"] = v.fuzz_report->executions;
  }
  if (v.coverage_first_last)
    j["coverage_first_last"] = {v.coverage_first_last->first, v.coverage_first_last->second};
  return j;
}

SessionResult Orchestrator::run_session() {
  t0_ = std::chrono::steady_clock::now();
  attempt_ = 0;
  tool_seq_ = 0;
  transcript_ = {};
  transcript_.session_id = cfg_.session_id;
  transcript_.target = cfg_.target;
  transcript_.backend = backend_->identity();
  transcript_.workspace_root = ws_->root().string();
  if (cfg_.transcript_path) {
    sink_.emplace(*cfg_.transcript_path, std::ios::trunc);
    if (!*sink_)
      throw SessionSetupError("cannot open transcript sink: " + cfg_.transcript_path->string());
    flush_line(transcript_.header_json());
  }

  slots_ = ws_->discover_harness_slots();
  if (slots_.empty())
    throw SessionSetupError("no fuzz entry points found under " + ws_->root().string());
  triage_state_ = {};
  for (const auto& s : slots_) triage_state_.all_slots.push_back(s.slot_id);
  triage_state_.current_slot = slots_.front().slot_id;
  session_env_.clear();

  const nlohmann::json tools_schema =
      backend_->supports_tool_calls() ? tools::ToolPool::registry() : nlohmann::json::array();

  auto ctx = gather_context();

  SessionResult result;
  bool success = false;
  bool any_verdict = false;

  for (attempt_ = 1; attempt_ <= cfg_.budgets.attempts && !success; ++attempt_) {
    AttemptBudget budget{1 + cfg_.budgets.fixes_per_attempt, cfg_.budgets.tool_calls_per_attempt};
    triage_state_.tried_slots = {triage_state_.current_slot};
    record("attempt_start", {{"slot", triage_state_.current_slot}});

    auto bundle = assemble_generation_prompt(cfg_.target, cfg_.language, ctx, tools_schema);
    auto harness = obtain_harness(bundle, budget, "generate");
    std::string fail_reason = harness ? "" : "no harness produced";

    for (int round = 0; harness && round < kRoundCap; ++round) {
      const auto& slot = slot_by_id(triage_state_.current_slot);
      if (ws_->is_substituted(slot.slot_id)) ws_->restore_slot(slot);
      ws_->substitute_harness(slot, *harness);
      result.final_harness = *harness;
      result.slot_id = slot.slot_id;

      auto build = ws_->run_build(session_env_, slot.fuzz_target_name);
      bool built = build.status == workspace::BuildOutcome::Status::Success;
      record("build", {{"status", built ? "success" : "failure"},
                       {"slot", slot.slot_id},
                       {"wall_time", build.wall_time},
                       {"log_tail", log_tail(build.log_text)}});

      if (!built) {
        auto diags = triage::parse_build_log(table_, build.log_text);
        triage::ClassifyContext cctx;
        cctx.harness_rel_path = slot.slot_id;
        cctx.harness_text = *harness;
        cctx.find_decl_header = [this](const std::string& sym) { return find_decl_header(sym); };
        triage::classify(diags, cctx);
        auto overall = triage::overall_class(diags);
        auto action = triage::plan_remediation(diags, triage_state_, ws_->root());
        record("triage_action", {{"kind", triage::to_string(action.kind)},
                                 {"error_class", triage::to_string(overall)},
                                 {"include_dirs", action.include_dirs},
                                 {"next_slot", action.next_slot},
                                 {"unresolved_includes", action.unresolved_includes}});
        switch (action.kind) {
          case triage::TriageAction::Kind::RouteToFix: {
            auto fix =
                compile_fix_bundle(*harness, build.log_text, action, overall, false, ctx,
                                   tools_schema);
            harness = obtain_harness(fix, budget, "fix_compile");
            if (!harness) fail_reason = "fix budget exhausted";
            break;
          }
          case triage::TriageAction::Kind::SwitchSlot: {
            ws_->restore_slot(slot);
            triage_state_.current_slot = action.next_slot;
            triage_state_.tried_slots.insert(action.next_slot);
            break;
          }
          case triage::TriageAction::Kind::AugmentIncludePath: {
            session_env_ =
                triage::apply_include_augmentation(session_env_, ws_->root(), action.include_dirs);
            triage_state_.include_augmentation_done = true;
            break;
          }
          case triage::TriageAction::Kind::AttachDriverExamples: {
            triage_state_.driver_examples_done = true;
            auto fix =
                compile_fix_bundle(*harness, build.log_text, action, overall, true, ctx,
                                   tools_schema);
            harness = obtain_harness(fix, budget, "fix_drivers");
            if (!harness) fail_reason = "fix budget exhausted";
            break;
          }
          case triage::TriageAction::Kind::GiveUp: {
            harness.reset();
            fail_reason = "build triage gave up";
            break;
          }
        }
        continue;
      }

      validation::ValidationInputs vin;
      vin.harness_text = *harness;
      vin.language = cfg_.language;
      vin.target = cfg_.target;
      vin.binary = build.produced_binary.value_or(ws_->root() / ws_->config().out_dir /
                                                  slot.fuzz_target_name);
      vin.fuzz.seconds = cfg_.fuzz_seconds;
      vin.fuzz.seed = cfg_.fuzz_seed;
      vin.fuzz.work_dir = ws_->root() / ".ha-validate";
      auto verdict = validation::run_validation(vin);
      any_verdict = true;
      result.verdict = verdict;
      record("verdict", verdict_json(verdict));

      if (verdict.overall) {
        success = true;
        result.success_attempt = attempt_;
        break;
      }
      auto fix = validation_fix_bundle(*harness, verdict, tools_schema);
      harness = obtain_harness(fix, budget, "fix_validation");
      if (!harness) fail_reason = "fix budget exhausted";
    }

    if (!success) {
      record("attempt_failed", {{"reason", fail_reason}});
      const auto& slot = slot_by_id(triage_state_.current_slot);
      if (ws_->is_substituted(slot.slot_id)) ws_->restore_slot(slot);
    }
  }

  transcript_.outcome =
      success ? Outcome::Success : (any_verdict ? Outcome::Failure : Outcome::BudgetExhausted);
  transcript_.success_attempt = result.success_attempt;
  result.outcome = transcript_.outcome;
  result.model_calls = transcript_.model_calls;
  result.tool_calls = transcript_.tool_calls;
  if (sink_) {
    flush_line(transcript_.trailer_json());
    sink_.reset();
  }
  result.transcript = transcript_;
  return result;
}

}  // namespace ha::agent
