#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "grammar/syntax_tree.hpp"
#include "util/subprocess.hpp"

namespace ha::workspace {

struct HarnessSlot {
  std::string slot_id;                // workspace-root-relative path
  std::filesystem::path source_path;  // absolute
  std::string original_bytes;
  std::string fuzz_target_name;  // expected binary name under the out dir
};

struct BuildOutcome {
  enum class Status { Success, Failure };
  Status status = Status::Failure;
  std::string log_text;
  std::optional<std::filesystem::path> produced_binary;
  double wall_time = 0;
};

struct WorkspaceConfig {
  std::filesystem::path root_path;
  grammar::Language language = grammar::Language::C;
  std::vector<std::string> build_command = {"./build.sh"};
  util::EnvMap env_overrides;
  std::optional<std::filesystem::path> compile_db_path;
  std::string fuzz_entry_symbol = "LLVMFuzzerTestOneInput";
  double build_timeout_seconds = 1800;
  size_t log_cap_bytes = 1 << 20;
  std::string out_dir = "out";  // root-relative location of built fuzz targets
  // Optional restriction of usable slots (root-relative paths); empty = all.
  std::vector<std::string> slot_filter;
  // slot_id -> binary name, overriding the file-stem default.
  std::map<std::string, std::string> target_name_overrides;
};

struct SlotConflict : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A target project checkout: slot discovery, harness substitution, builds.
/// One instance is confined to one session; parallel sessions use disjoint
/// working copies made with clone_into.
class ProjectWorkspace {
 public:
  explicit ProjectWorkspace(WorkspaceConfig cfg);

  const WorkspaceConfig& config() const { return cfg_; }
  const std::filesystem::path& root() const { return cfg_.root_path; }

  /// Every source file under the root defining the fuzz entry-point symbol,
  /// ordered by path. Declarations alone do not qualify.
  std::vector<HarnessSlot> discover_harness_slots();

  /// Replaces the slot file's content; reversible via restore_slot.
  void substitute_harness(const HarnessSlot& slot, const std::string& harness_text);
  void restore_slot(const HarnessSlot& slot);
  bool is_substituted(const std::string& slot_id) const { return substituted_.count(slot_id) > 0; }

  /// Runs the build command with process env ⊎ env_overrides ⊎ extra_env
  /// (rightmost wins; CFLAGS/CXXFLAGS append). Success requires the named
  /// fuzz target binary to exist and be executable afterwards.
  BuildOutcome run_build(const util::EnvMap& extra_env, const std::string& fuzz_target_name);

  /// Copies the workspace tree to dest and returns a config rooted there.
  static WorkspaceConfig clone_into(const WorkspaceConfig& cfg,
                                    const std::filesystem::path& dest);

 private:
  WorkspaceConfig cfg_;
  std::set<std::string> substituted_;
};

}  // namespace ha::workspace
