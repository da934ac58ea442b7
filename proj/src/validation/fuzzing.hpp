#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ha::validation {

struct CrashFrame {
  int index = 0;
  std::string function;
  std::string location;  // file:line:col or module offset
};

struct FuzzRunReport {
  double duration = 0.0;
  uint64_t executions = 0;
  bool crashed = false;
  std::optional<std::string> crash_kind;
  std::vector<CrashFrame> crash_stack;
  std::filesystem::path corpus_dir;
  // (elapsed seconds, engine coverage counter), non-decreasing in time.
  std::vector<std::pair<double, uint64_t>> cov_series;
  std::string raw_output;
};

struct FuzzOptions {
  double seconds = 60.0;
  uint32_t seed = 1;
  std::filesystem::path work_dir;  // corpus/ and artifacts/ are created here
  std::map<std::string, std::string> extra_env;
};

struct LaunchFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs the fuzz target for the wall-clock budget with a fresh corpus
/// directory. A sanitizer report, abnormal exit, or hang marks the run
/// crashed; the crash stack is parsed from standard report frames.
FuzzRunReport run_fuzz_check(const std::filesystem::path& binary, const FuzzOptions& opts);

/// Pass iff the engine's final coverage counter exceeds the first sample.
/// A single sample shows no increase and fails.
bool check_coverage_increase(const FuzzRunReport& report);

/// Standard sanitizer frames: `#N 0x... in func file:line:col`.
std::vector<CrashFrame> parse_crash_stack(const std::string& output);

}  // namespace ha::validation
