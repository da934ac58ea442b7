#include "agent/transcript.hpp"

#include <fstream>
#include <set>

#include "util/fs.hpp"
#include "util/text.hpp"

namespace ha::agent {
namespace {

// Fields that legitimately differ between two otherwise identical runs.
const std::set<std::string>& volatile_keys() {
  static const std::set<std::string> keys = {
      "t",          "latency_ms",   "wall_time",  "duration_seconds", "executions",
      "cov_series", "coverage_first_last", "corpus_dir", "work_dir",  "binary",
      "crash_stack", "raw_output",  "log_tail",   "pid",
  };
  return keys;
}

void strip_volatile(nlohmann::json& node, const std::string& root) {
  if (node.is_object()) {
    for (const auto& key : volatile_keys()) node.erase(key);
    for (auto& [k, v] : node.items()) strip_volatile(v, root);
  } else if (node.is_array()) {
    for (auto& v : node) strip_volatile(v, root);
  } else if (node.is_string() && !root.empty()) {
    std::string s = node.get<std::string>();
    size_t pos = 0;
    bool changed = false;
    while ((pos = s.find(root, pos)) != std::string::npos) {
      s.replace(pos, root.size(), "<WORKSPACE>");
      pos += std::string("<WORKSPACE>").size();
      changed = true;
    }
    if (changed) node = s;
  }
}

}  // namespace

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::Failure: return "Failure";
    case Outcome::BudgetExhausted: return "Budget Exhausted";
  }
  return "Budget Exhausted";
}

static Outcome outcome_from_string(const std::string& s) {
  if (s == "Success") return Outcome::Success;
  if (s == "Failure") return Outcome::Failure;
  return Outcome::BudgetExhausted;
}

nlohmann::json SessionTranscript::header_json() const {
  return {{"kind", "session_start"}, {"schema_version", kSchemaVersion},
          {"session_id", session_id}, {"target", target},
          {"backend", backend},       {"workspace_root", workspace_root}};
}

nlohmann::json SessionTranscript::trailer_json() const {
  return {{"kind", "session_end"},
          {"outcome", to_string(outcome)},
          {"success_attempt", success_attempt},
          {"model_calls", model_calls},
          {"tool_calls", tool_calls}};
}

nlohmann::json SessionTranscript::event_json(const TranscriptEvent& e) {
  return {{"kind", e.kind}, {"attempt", e.attempt}, {"t", e.t}, {"data", e.data}};
}

void SessionTranscript::write_jsonl(const std::filesystem::path& path) const {
  std::string out = header_json().dump() + "\n";
  for (const auto& e : events) out += event_json(e).dump() + "\n";
  out += trailer_json().dump() + "\n";
  util::write_file(path, out);
}

SessionTranscript SessionTranscript::read_jsonl(const std::filesystem::path& path) {
  SessionTranscript t;
  auto text = util::read_file(path);
  for (auto line : util::split_lines(text)) {
    if (util::trim(line).empty()) continue;
    auto parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded())
      throw std::runtime_error("transcript line is not JSON: " + std::string(line));
    std::string kind = parsed.value("kind", "");
    if (kind == "session_start") {
      if (parsed.value("schema_version", 0) != kSchemaVersion)
        throw std::runtime_error("unsupported transcript schema version");
      t.session_id = parsed.value("session_id", "");
      t.target = parsed.value("target", "");
      t.backend = parsed.value("backend", "");
      t.workspace_root = parsed.value("workspace_root", "");
    } else if (kind == "session_end") {
      t.outcome = outcome_from_string(parsed.value("outcome", ""));
      t.success_attempt = parsed.value("success_attempt", 0);
      t.model_calls = parsed.value("model_calls", 0);
      t.tool_calls = parsed.value("tool_calls", 0);
    } else {
      TranscriptEvent e;
      e.kind = kind;
      e.attempt = parsed.value("attempt", 0);
      e.t = parsed.value("t", 0.0);
      e.data = parsed.value("data", nlohmann::json::object());
      t.events.push_back(std::move(e));
    }
  }
  return t;
}

std::string normalized_transcript(const SessionTranscript& t) {
  auto header = t.header_json();
  header["workspace_root"] = "<WORKSPACE>";
  std::string out = header.dump() + "\n";
  for (const auto& e : t.events) {
    auto j = SessionTranscript::event_json(e);
    j.erase("t");
    strip_volatile(j, t.workspace_root);
    out += j.dump() + "\n";
  }
  out += t.trailer_json().dump() + "\n";
  return out;
}

uint64_t replay_hash(const SessionTranscript& t) {
  uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : normalized_transcript(t)) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::vector<ModelReply> replies_from_transcript(const SessionTranscript& t) {
  std::vector<ModelReply> replies;
  for (const auto& e : t.events) {
    if (e.kind != "reply") continue;
    ModelReply r;
    r.text = e.data.value("text", "");
    if (e.data.contains("tool_calls")) {
      for (const auto& call : e.data["tool_calls"]) {
        ToolCallRequest req;
        req.id = call.value("id", "");
        req.name = call.value("name", "");
        req.arguments = call.value("arguments", nlohmann::json::object());
        r.tool_calls.push_back(std::move(req));
      }
    }
    replies.push_back(std::move(r));
  }
  return replies;
}

}  // namespace ha::agent
