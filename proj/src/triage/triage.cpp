#include "triage/triage.hpp"

#include <json.hpp>

#include <algorithm>

#include "util/fs.hpp"
#include "util/text.hpp"

namespace ha::triage {

namespace {

using nlohmann::json;
using Candidate = PatternTable::Candidate;

// Kept in sync with data/triage_patterns.json (a test compares them).
const char* kDefaultPatternsJson = R"JSON({
  "version": 1,
  "patterns": [
    {"name": "inclusion_not_found", "class": "InclusionError",
     "regex": "'([^']+)' file not found",
     "captures": {"missing_include": 1}},
    {"name": "inclusion_no_such_file", "class": "InclusionError",
     "regex": "fatal error: ([^:]+): No such file or directory",
     "captures": {"missing_include": 1}},
    {"name": "undefined_reference", "class": "LinkError",
     "regex": "undefined reference to [`']([^']+)'",
     "captures": {"symbol": 1}},
    {"name": "missing_library", "class": "LinkError",
     "regex": "cannot find -l(\\S+)",
     "captures": {"symbol": 1}},
    {"name": "undefined_symbol", "class": "LinkError",
     "regex": "undefined symbol: (.+)$",
     "captures": {"symbol": 1}},
    {"name": "unresolved_external", "class": "LinkError",
     "regex": "unresolved external symbol (\\S+)",
     "captures": {"symbol": 1}},
    {"name": "undeclared_function", "class": "MissingHeaderCandidate",
     "regex": "call to undeclared function '([^']+)'",
     "captures": {"symbol": 1}},
    {"name": "implicit_declaration", "class": "MissingHeaderCandidate",
     "regex": "implicit declaration of function '([^']+)'",
     "captures": {"symbol": 1}},
    {"name": "undeclared_identifier", "class": "MissingHeaderCandidate",
     "regex": "use of undeclared identifier '([^']+)'",
     "captures": {"symbol": 1}},
    {"name": "unknown_type_name", "class": "MissingHeaderCandidate",
     "regex": "unknown type name '([^']+)'",
     "captures": {"symbol": 1}},
    {"name": "located_error", "class": "LocatedDiagnostic",
     "regex": "^([^:\\s][^:]*):(\\d+):(?:(\\d+):)?\\s*(?:fatal )?error:\\s*(.*)$",
     "captures": {"file": 1, "line": 2, "message": 4}},
    {"name": "located_warning", "class": "Warning",
     "regex": "^([^:\\s][^:]*):(\\d+):(?:(\\d+):)?\\s*warning:\\s*(.*)$",
     "captures": {"file": 1, "line": 2, "message": 4}},
    {"name": "make_failure", "class": "BuildScriptError",
     "regex": "^make(?:\\[\\d+\\])?: \\*\\*\\*"},
    {"name": "shell_failure", "class": "BuildScriptError",
     "regex": "command not found|No rule to make target|^\\S*sh: .*No such file or directory|^\\S*sh: (?:line )?\\d+: .*not found"},
    {"name": "cmake_failure", "class": "BuildScriptError",
     "regex": "^CMake Error|^ninja: (?:error|fatal):"},
    {"name": "configure_failure", "class": "BuildScriptError",
     "regex": "^configure: error:"},
    {"name": "driver_failure", "class": "BuildScriptError",
     "regex": "^(?:clang|clang\\+\\+|gcc|g\\+\\+|cc|c\\+\\+|collect2)(?:-\\d+)?: (?:fatal )?error:"},
    {"name": "generic_error", "class": "Unknown",
     "regex": "\\b[Ee]rror\\b|ERROR"}
  ]
})JSON";

std::optional<Candidate> candidate_from_string(const std::string& s) {
  if (s == "InclusionError") return Candidate::InclusionError;
  if (s == "LinkError") return Candidate::LinkError;
  if (s == "MissingHeaderCandidate") return Candidate::MissingHeaderCandidate;
  if (s == "LocatedDiagnostic") return Candidate::LocatedDiagnostic;
  if (s == "BuildScriptError") return Candidate::BuildScriptError;
  if (s == "Warning") return Candidate::Warning;
  if (s == "Unknown") return Candidate::Unknown;
  return std::nullopt;
}

bool has_candidate(const Diagnostic& d, Candidate c) {
  return d.matched_candidates.count(static_cast<int>(c)) > 0;
}

// True when `path` (as printed by the compiler) refers to `rel` under the
// workspace: exact match or suffix match on a path-component boundary.
bool path_refers_to(const std::string& path, const std::string& rel) {
  if (rel.empty()) return false;
  if (path == rel) return true;
  if (path.size() > rel.size() && path.compare(path.size() - rel.size(), rel.size(), rel) == 0)
    return path[path.size() - rel.size() - 1] == '/';
  return false;
}

bool harness_includes_header(const std::string& harness_text, const std::string& header_rel) {
  for (auto line : util::split_lines(harness_text)) {
    auto t = util::trim(line);
    if (t.rfind("#include", 0) != 0) continue;
    size_t open = t.find_first_of("\"<", 8);
    if (open == std::string_view::npos) continue;
    char close_ch = t[open] == '"' ? '"' : '>';
    size_t close = t.find(close_ch, open + 1);
    if (close == std::string_view::npos) continue;
    std::string inc(t.substr(open + 1, close - open - 1));
    if (path_refers_to(header_rel, inc) || inc == header_rel) return true;
  }
  return false;
}

}  // namespace

std::string to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::LinkError: return "LinkError";
    case ErrorClass::InclusionError: return "InclusionError";
    case ErrorClass::MissingHeaderError: return "MissingHeaderError";
    case ErrorClass::HarnessCodeError: return "HarnessCodeError";
    case ErrorClass::BuildScriptError: return "BuildScriptError";
    case ErrorClass::Unknown: break;
  }
  return "Unknown";
}

std::optional<ErrorClass> error_class_from_string(const std::string& s) {
  if (s == "LinkError") return ErrorClass::LinkError;
  if (s == "InclusionError") return ErrorClass::InclusionError;
  if (s == "MissingHeaderError") return ErrorClass::MissingHeaderError;
  if (s == "HarnessCodeError") return ErrorClass::HarnessCodeError;
  if (s == "BuildScriptError") return ErrorClass::BuildScriptError;
  if (s == "Unknown") return ErrorClass::Unknown;
  return std::nullopt;
}

std::string to_string(TriageAction::Kind k) {
  switch (k) {
    case TriageAction::Kind::RouteToFix: return "RouteToFix";
    case TriageAction::Kind::SwitchSlot: return "SwitchSlot";
    case TriageAction::Kind::AugmentIncludePath: return "AugmentIncludePath";
    case TriageAction::Kind::AttachDriverExamples: return "AttachDriverExamples";
    case TriageAction::Kind::GiveUp: break;
  }
  return "GiveUp";
}

PatternTable PatternTable::load_json(const std::string& json_text) {
  json doc = json::parse(json_text);
  PatternTable table;
  table.version_ = doc.at("version").get<int>();
  for (const auto& p : doc.at("patterns")) {
    Pattern pat;
    pat.name = p.at("name").get<std::string>();
    pat.regex_text = p.at("regex").get<std::string>();
    pat.regex = std::regex(pat.regex_text, std::regex::ECMAScript);
    auto cand = candidate_from_string(p.at("class").get<std::string>());
    if (!cand) throw std::runtime_error("unknown pattern class in table: " + pat.name);
    pat.candidate = *cand;
    if (p.contains("captures"))
      for (auto it = p["captures"].begin(); it != p["captures"].end(); ++it)
        pat.captures[it.key()] = it.value().get<int>();
    table.patterns_.push_back(std::move(pat));
  }
  return table;
}

PatternTable PatternTable::load_default() { return load_json(kDefaultPatternsJson); }

PatternTable PatternTable::load_file(const std::filesystem::path& path) {
  return load_json(util::read_file(path));
}

std::vector<Diagnostic> parse_build_log(const PatternTable& table, const std::string& log_text) {
  std::vector<Diagnostic> diags;
  for (auto line_view : util::split_lines(log_text)) {
    std::string line(line_view);
    Diagnostic d;
    d.raw_line = line;
    bool matched = false;
    bool non_warning = false;
    for (const auto& pat : table.patterns()) {
      std::smatch m;
      if (!std::regex_search(line, m, pat.regex)) continue;
      matched = true;
      d.matched_candidates.insert(static_cast<int>(pat.candidate));
      if (pat.candidate != Candidate::Warning) non_warning = true;
      for (const auto& [name, idx] : pat.captures) {
        if (idx < 0 || static_cast<size_t>(idx) >= m.size() || !m[idx].matched) continue;
        std::string val = m[idx].str();
        if (name == "file" && !d.file) d.file = val;
        else if (name == "line" && !d.line) {
          try {
            d.line = static_cast<uint32_t>(std::stoul(val));
          } catch (const std::exception&) {
          }
        }
        else if (name == "message" && d.message.empty()) d.message = val;
        else if (name == "missing_include" && !d.missing_include) d.missing_include = val;
        else if (name == "symbol" && !d.symbol) d.symbol = val;
      }
    }
    if (!matched) continue;
    d.severity = non_warning ? Diagnostic::Severity::Error : Diagnostic::Severity::Warning;
    if (d.message.empty()) d.message = line;
    diags.push_back(std::move(d));
  }
  return diags;
}

void classify(std::vector<Diagnostic>& diags, const ClassifyContext& ctx) {
  for (auto& d : diags) {
    if (d.severity == Diagnostic::Severity::Warning) {
      d.error_class = ErrorClass::Unknown;
      continue;
    }
    bool in_harness = d.file && path_refers_to(*d.file, ctx.harness_rel_path);
    if (has_candidate(d, Candidate::InclusionError)) {
      d.error_class = ErrorClass::InclusionError;
      continue;
    }
    if (has_candidate(d, Candidate::LinkError)) {
      d.error_class = ErrorClass::LinkError;
      continue;
    }
    if (has_candidate(d, Candidate::MissingHeaderCandidate)) {
      std::optional<std::string> header;
      if (d.symbol && ctx.find_decl_header) header = ctx.find_decl_header(*d.symbol);
      if (header && !harness_includes_header(ctx.harness_text, *header)) {
        d.error_class = ErrorClass::MissingHeaderError;
        continue;
      }
      // Symbol unknown to the project: treat as an error in the code that
      // mentions it.
      d.error_class = (d.file && !in_harness) ? ErrorClass::BuildScriptError
                                              : ErrorClass::HarnessCodeError;
      continue;
    }
    if (has_candidate(d, Candidate::LocatedDiagnostic)) {
      d.error_class = in_harness ? ErrorClass::HarnessCodeError : ErrorClass::BuildScriptError;
      continue;
    }
    if (has_candidate(d, Candidate::BuildScriptError)) {
      d.error_class = ErrorClass::BuildScriptError;
      continue;
    }
    d.error_class = ErrorClass::Unknown;
  }
}

ErrorClass overall_class(const std::vector<Diagnostic>& classified) {
  static const ErrorClass order[] = {
      ErrorClass::InclusionError,    ErrorClass::LinkError,        ErrorClass::MissingHeaderError,
      ErrorClass::HarnessCodeError,  ErrorClass::BuildScriptError, ErrorClass::Unknown,
  };
  for (ErrorClass c : order)
    for (const auto& d : classified)
      if (d.severity == Diagnostic::Severity::Error && d.error_class == c) return c;
  return ErrorClass::Unknown;
}

std::vector<std::string> resolve_missing_include_dirs(const std::filesystem::path& root,
                                                      const std::string& missing_include) {
  std::vector<std::string> dirs;
  if (missing_include.empty()) return dirs;
  util::WalkOptions wopts;
  wopts.deny_dirs = {".git", "build", "out", "corpus"};
  for (const auto& path : util::walk_files(root, wopts)) {
    std::string rel = util::relative_to(root, path);
    std::string dir;
    if (rel == missing_include) {
      dir = ".";
    } else if (rel.size() > missing_include.size() &&
               rel.compare(rel.size() - missing_include.size(), missing_include.size(),
                           missing_include) == 0 &&
               rel[rel.size() - missing_include.size() - 1] == '/') {
      dir = rel.substr(0, rel.size() - missing_include.size() - 1);
    } else {
      continue;
    }
    if (std::find(dirs.begin(), dirs.end(), dir) == dirs.end()) dirs.push_back(dir);
  }
  return dirs;
}

TriageAction plan_remediation(const std::vector<Diagnostic>& classified,
                              const AttemptState& state,
                              const std::filesystem::path& workspace_root) {
  auto with_class = [&](ErrorClass c) {
    std::vector<Diagnostic> out;
    for (const auto& d : classified)
      if (d.severity == Diagnostic::Severity::Error && d.error_class == c) out.push_back(d);
    return out;
  };

  auto harness_diags = with_class(ErrorClass::HarnessCodeError);
  if (!harness_diags.empty()) {
    TriageAction a;
    a.kind = TriageAction::Kind::RouteToFix;
    a.diagnostics = std::move(harness_diags);
    return a;
  }

  for (const auto& slot : state.all_slots) {
    if (!state.tried_slots.count(slot)) {
      TriageAction a;
      a.kind = TriageAction::Kind::SwitchSlot;
      a.next_slot = slot;
      return a;
    }
  }

  std::vector<std::string> unresolved;
  auto inclusion = with_class(ErrorClass::InclusionError);
  if (!inclusion.empty() && !state.include_augmentation_done) {
    TriageAction a;
    a.kind = TriageAction::Kind::AugmentIncludePath;
    for (const auto& d : inclusion) {
      if (!d.missing_include) continue;
      auto dirs = resolve_missing_include_dirs(workspace_root, *d.missing_include);
      if (dirs.empty()) {
        unresolved.push_back(*d.missing_include);
        continue;
      }
      for (auto& dir : dirs)
        if (std::find(a.include_dirs.begin(), a.include_dirs.end(), dir) == a.include_dirs.end())
          a.include_dirs.push_back(dir);
    }
    if (!a.include_dirs.empty()) {
      a.unresolved_includes = unresolved;
      return a;
    }
    // Nothing resolvable under the workspace: fall through, keeping the
    // unresolved list on whatever action wins.
  }

  auto missing = with_class(ErrorClass::MissingHeaderError);
  if (!missing.empty() && !state.driver_examples_done) {
    TriageAction a;
    a.kind = TriageAction::Kind::AttachDriverExamples;
    a.diagnostics = std::move(missing);
    a.unresolved_includes = unresolved;
    return a;
  }

  auto link = with_class(ErrorClass::LinkError);
  if (!link.empty()) {
    TriageAction a;
    a.kind = TriageAction::Kind::RouteToFix;
    a.diagnostics = std::move(link);
    a.unresolved_includes = unresolved;
    a.hint =
        "The linker cannot resolve the symbols above. The harness may rely on "
        "declarations that do not exist in the project; remove them or call "
        "existing project functions, adding any missing external declarations.";
    return a;
  }

  TriageAction give_up;
  give_up.unresolved_includes = unresolved;
  return give_up;
}

std::map<std::string, std::string> apply_include_augmentation(
    const std::map<std::string, std::string>& current_extra, const std::filesystem::path& root,
    const std::vector<std::string>& dirs) {
  auto out = current_extra;
  auto append_once = [](std::string& value, const std::string& flag) {
    size_t pos = 0;
    while ((pos = value.find(flag, pos)) != std::string::npos) {
      bool left_ok = pos == 0 || value[pos - 1] == ' ';
      size_t end = pos + flag.size();
      bool right_ok = end == value.size() || value[end] == ' ';
      if (left_ok && right_ok) return;
      pos = end;
    }
    if (!value.empty()) value += ' ';
    value += flag;
  };
  for (const auto& dir : dirs) {
    // Builds run with cwd at the workspace root, so keep flags root-relative;
    // they stay valid across workspace clones.
    std::string rel = dir;
    std::filesystem::path p(dir);
    if (p.is_absolute() && util::path_inside(root, p)) rel = util::relative_to(root, p);
    append_once(out["CFLAGS"], "-I" + rel);
    append_once(out["CXXFLAGS"], "-I" + rel);
  }
  return out;
}

}  // namespace ha::triage
