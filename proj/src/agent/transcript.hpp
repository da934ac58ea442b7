#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "agent/backend.hpp"

namespace ha::agent {

enum class Outcome { Success, Failure, BudgetExhausted };
std::string to_string(Outcome o);

struct TranscriptEvent {
  int attempt = 0;
  std::string kind;  // prompt | reply | tool_call | tool_result | build | triage_action | verdict
  nlohmann::json data;
  double t = 0;  // seconds since session start
};

/// Complete session record. Line-delimited on disk: a session_start header,
/// one line per event, a session_end trailer.
struct SessionTranscript {
  static constexpr int kSchemaVersion = 1;

  std::string session_id;
  std::string target;
  std::string backend;
  std::string workspace_root;
  std::vector<TranscriptEvent> events;
  Outcome outcome = Outcome::BudgetExhausted;
  int success_attempt = 0;  // 1-based; 0 = none
  int model_calls = 0;
  int tool_calls = 0;

  nlohmann::json header_json() const;
  nlohmann::json trailer_json() const;
  static nlohmann::json event_json(const TranscriptEvent& e);

  void write_jsonl(const std::filesystem::path& path) const;
  static SessionTranscript read_jsonl(const std::filesystem::path& path);
};

/// The transcript as JSONL with volatile fields erased: timestamps,
/// latencies, runtime counters, and every occurrence of the workspace root
/// path. Two runs that made the same decisions normalize identically.
std::string normalized_transcript(const SessionTranscript& t);

/// FNV-1a 64 over the normalized form.
uint64_t replay_hash(const SessionTranscript& t);

/// The recorded model replies, in order, for replaying through a scripted
/// backend.
std::vector<ModelReply> replies_from_transcript(const SessionTranscript& t);

}  // namespace ha::agent
