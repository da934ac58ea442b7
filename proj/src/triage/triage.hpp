#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace ha::triage {

enum class ErrorClass {
  LinkError,
  InclusionError,
  MissingHeaderError,
  HarnessCodeError,
  BuildScriptError,
  Unknown,
};

std::string to_string(ErrorClass c);
std::optional<ErrorClass> error_class_from_string(const std::string& s);

struct Diagnostic {
  std::string raw_line;
  std::optional<std::string> file;
  std::optional<uint32_t> line;
  std::string message;
  enum class Severity { Error, Warning };
  Severity severity = Severity::Error;
  ErrorClass error_class = ErrorClass::Unknown;
  // Pattern captures feeding classification and remediation.
  std::optional<std::string> missing_include;
  std::optional<std::string> symbol;
  // Parse metadata: which intermediate pattern classes matched this line.
  std::set<int> matched_candidates;
};

/// Ordered, versioned pattern table; data-driven so new compiler message
/// shapes need no code change.
class PatternTable {
 public:
  // Intermediate classes resolved during classify().
  enum class Candidate {
    InclusionError,
    LinkError,
    MissingHeaderCandidate,  // undeclared identifier/type; needs project lookup
    LocatedDiagnostic,       // file:line: error: msg; class depends on location
    BuildScriptError,
    Warning,
    Unknown,
  };
  struct Pattern {
    std::string name;
    std::regex regex;
    std::string regex_text;
    Candidate candidate;
    std::map<std::string, int> captures;  // capture name -> group index
  };

  static PatternTable load_default();
  static PatternTable load_file(const std::filesystem::path& path);
  static PatternTable load_json(const std::string& json_text);

  int version() const { return version_; }
  const std::vector<Pattern>& patterns() const { return patterns_; }

 private:
  int version_ = 0;
  std::vector<Pattern> patterns_;
};

/// One Diagnostic per matched log line; lines matching several patterns are
/// merged. Unmatched error-looking lines become Unknown diagnostics.
std::vector<Diagnostic> parse_build_log(const PatternTable& table, const std::string& log_text);

struct ClassifyContext {
  std::string harness_rel_path;  // substituted slot path
  std::string harness_text;      // current harness source
  // Symbol -> project header (root-relative) declaring it, if any.
  std::function<std::optional<std::string>(const std::string&)> find_decl_header;
};

/// Fills error_class on every diagnostic. Precedence when a line matches
/// several patterns: InclusionError > LinkError > MissingHeaderError >
/// HarnessCodeError > BuildScriptError.
void classify(std::vector<Diagnostic>& diags, const ClassifyContext& ctx);

/// Dominant class of a whole log: highest-precedence class among
/// Error-severity diagnostics, Unknown when there are none.
ErrorClass overall_class(const std::vector<Diagnostic>& classified);

struct AttemptState {
  std::vector<std::string> all_slots;  // ordered slot ids
  std::set<std::string> tried_slots;   // includes the current slot
  std::string current_slot;
  bool include_augmentation_done = false;
  bool driver_examples_done = false;
};

struct TriageAction {
  enum class Kind { RouteToFix, SwitchSlot, AugmentIncludePath, AttachDriverExamples, GiveUp };
  Kind kind = Kind::GiveUp;
  std::vector<Diagnostic> diagnostics;       // RouteToFix payload
  std::string next_slot;                     // SwitchSlot payload
  std::vector<std::string> include_dirs;     // AugmentIncludePath payload (root-relative)
  std::vector<std::string> unresolved_includes;
  std::string hint;
};

std::string to_string(TriageAction::Kind k);

/// Directories under root whose contents suffix-match the missing include
/// string, root-relative, deduplicated, in walk order.
std::vector<std::string> resolve_missing_include_dirs(const std::filesystem::path& root,
                                                      const std::string& missing_include);

/// The decision procedure: (1) harness errors route to fix, (2) untried
/// slots switch, (3) inclusion errors augment include paths once,
/// (4) missing headers attach driver examples once, (5) exhausted link
/// errors route to fix with a declaration hint, (6) give up.
TriageAction plan_remediation(const std::vector<Diagnostic>& classified,
                              const AttemptState& state,
                              const std::filesystem::path& workspace_root);

/// Env delta appending one -I flag per dir to both CFLAGS and CXXFLAGS.
/// Dirs stay root-relative (builds run with cwd at the workspace root);
/// absolute dirs inside root are relativized. Idempotent over
/// `current_extra`.
std::map<std::string, std::string> apply_include_augmentation(
    const std::map<std::string, std::string>& current_extra, const std::filesystem::path& root,
    const std::vector<std::string>& dirs);

}  // namespace ha::triage
