#include "validation/validator.hpp"

namespace ha::validation {

ValidationVerdict run_validation(const ValidationInputs& in) {
  ValidationVerdict v;

  v.fake_check = check_fake_definition(in.harness_text, in.language, in.target);
  if (!v.fake_check.pass) {
    v.skipped = {"call_check", "fuzz_check", "coverage_check"};
    return v;
  }

  v.call_check = check_call(in.harness_text, in.language, in.target);
  if (!v.call_check.pass) {
    v.skipped = {"fuzz_check", "coverage_check"};
    return v;
  }

  v.fuzz_report = run_fuzz_check(in.binary, in.fuzz);
  v.fuzz_pass = !v.fuzz_report->crashed;
  if (!v.fuzz_pass) {
    v.skipped = {"coverage_check"};
    return v;
  }

  if (!v.fuzz_report->cov_series.empty()) {
    v.coverage_first_last = {v.fuzz_report->cov_series.front().second,
                             v.fuzz_report->cov_series.back().second};
    v.coverage_pass = check_coverage_increase(*v.fuzz_report);
  }
  v.overall = v.fake_check.pass && v.call_check.pass && v.fuzz_pass && v.coverage_pass;
  return v;
}

std::string to_string(OutcomeCategory c) {
  switch (c) {
    case OutcomeCategory::Crash: return "Crash";
    case OutcomeCategory::NotReached: return "NotReached";
    case OutcomeCategory::ConstantCoverage: return "ConstantCoverage";
    case OutcomeCategory::Improved: break;
  }
  return "Improved";
}

OutcomeCategory categorize_outcome(const FuzzRunReport& report,
                                   const std::optional<TargetCoverage>& target_cov) {
  if (report.crashed) return OutcomeCategory::Crash;
  if (target_cov) {
    if (target_cov->entered_total == 0) return OutcomeCategory::NotReached;
    if (!target_cov->per_input.empty() &&
        target_cov->per_input.front().second == target_cov->union_indices)
      return OutcomeCategory::ConstantCoverage;
    return OutcomeCategory::Improved;
  }
  if (report.cov_series.size() >= 2 &&
      report.cov_series.back().second == report.cov_series.front().second)
    return OutcomeCategory::ConstantCoverage;
  return OutcomeCategory::Improved;
}

}  // namespace ha::validation
