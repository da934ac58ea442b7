#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grammar/syntax_tree.hpp"
#include "validation/checks.hpp"
#include "validation/coverage.hpp"
#include "validation/fuzzing.hpp"

namespace ha::validation {

struct ValidationInputs {
  std::string harness_text;
  grammar::Language language = grammar::Language::C;
  std::string target;  // qualified identifiers match on the terminal name
  std::filesystem::path binary;
  FuzzOptions fuzz;
};

/// Outcome of the four-check gauntlet. A failed check short-circuits the
/// rest; `skipped` records which checks never ran.
struct ValidationVerdict {
  CheckResult fake_check;
  CheckResult call_check;
  bool fuzz_pass = false;
  std::optional<FuzzRunReport> fuzz_report;
  bool coverage_pass = false;
  std::optional<std::pair<uint64_t, uint64_t>> coverage_first_last;
  bool overall = false;
  std::vector<std::string> skipped;
};

ValidationVerdict run_validation(const ValidationInputs& in);

enum class OutcomeCategory { Crash, NotReached, ConstantCoverage, Improved };

std::string to_string(OutcomeCategory c);

/// Crash > NotReached > ConstantCoverage > Improved. Without per-target
/// measurement the whole-binary coverage series stands in: NotReached is
/// then undetectable and constancy means a flat series.
OutcomeCategory categorize_outcome(const FuzzRunReport& report,
                                   const std::optional<TargetCoverage>& target_cov);

}  // namespace ha::validation
