#include "workspace/workspace.hpp"

#include <unistd.h>

#include <algorithm>
#include <functional>

#include "util/fs.hpp"
#include "util/text.hpp"

namespace ha::workspace {

namespace {

bool defines_symbol(const grammar::SyntaxTree& tree, const std::string& symbol) {
  bool found = false;
  std::function<void(TSNode)> walk = [&](TSNode n) {
    if (found) return;
    if (grammar::is_function_definition(n)) {
      auto name = grammar::function_name_node(n);
      if (name && tree.text(*name) == symbol) {
        found = true;
        return;
      }
    }
    for (uint32_t i = 0; i < ts_node_named_child_count(n); i++) walk(ts_node_named_child(n, i));
  };
  walk(tree.root());
  return found;
}

}  // namespace

ProjectWorkspace::ProjectWorkspace(WorkspaceConfig cfg) : cfg_(std::move(cfg)) {
  if (!std::filesystem::is_directory(cfg_.root_path))
    throw std::runtime_error("workspace root does not exist: " + cfg_.root_path.string());
}

std::vector<HarnessSlot> ProjectWorkspace::discover_harness_slots() {
  util::WalkOptions wopts;
  wopts.extensions = {".c", ".cc", ".cpp", ".cxx"};
  wopts.deny_dirs = {".git", "build", "out", "corpus"};
  std::vector<HarnessSlot> slots;
  for (const auto& path : util::walk_files(cfg_.root_path, wopts)) {
    std::string rel = util::relative_to(cfg_.root_path, path);
    if (!cfg_.slot_filter.empty() &&
        std::find(cfg_.slot_filter.begin(), cfg_.slot_filter.end(), rel) ==
            cfg_.slot_filter.end())
      continue;
    auto content = util::try_read_file(path);
    if (!content) continue;
    if (content->find(cfg_.fuzz_entry_symbol) == std::string::npos) continue;
    auto tree = grammar::SyntaxTree::parse(*content,
                                           grammar::language_for_path(path, cfg_.language));
    if (!tree || !defines_symbol(*tree, cfg_.fuzz_entry_symbol)) continue;
    HarnessSlot slot;
    slot.slot_id = rel;
    slot.source_path = path;
    slot.original_bytes = *content;
    auto it = cfg_.target_name_overrides.find(rel);
    slot.fuzz_target_name = it != cfg_.target_name_overrides.end() ? it->second
                                                                   : path.stem().string();
    slots.push_back(std::move(slot));
  }
  return slots;
}

void ProjectWorkspace::substitute_harness(const HarnessSlot& slot,
                                          const std::string& harness_text) {
  if (substituted_.count(slot.slot_id))
    throw SlotConflict("slot already substituted: " + slot.slot_id);
  util::write_file(slot.source_path, harness_text);
  substituted_.insert(slot.slot_id);
}

void ProjectWorkspace::restore_slot(const HarnessSlot& slot) {
  util::write_file(slot.source_path, slot.original_bytes);
  substituted_.erase(slot.slot_id);
}

BuildOutcome ProjectWorkspace::run_build(const util::EnvMap& extra_env,
                                         const std::string& fuzz_target_name) {
  util::RunOptions opts;
  opts.argv = cfg_.build_command;
  if (!opts.argv.empty()) {
    std::filesystem::path cmd = opts.argv[0];
    if (cmd.is_relative() && std::filesystem::exists(cfg_.root_path / cmd))
      opts.argv[0] = (cfg_.root_path / cmd).string();
  }
  opts.cwd = cfg_.root_path;
  auto env = util::merge_env(util::current_env(), cfg_.env_overrides, {"CFLAGS", "CXXFLAGS"});
  env = util::merge_env(std::move(env), extra_env, {"CFLAGS", "CXXFLAGS"});
  opts.env = std::move(env);
  opts.timeout_seconds = cfg_.build_timeout_seconds;
  opts.output_cap_bytes = cfg_.log_cap_bytes;

  auto res = util::run_process(opts);

  BuildOutcome outcome;
  outcome.wall_time = res.wall_seconds;
  outcome.log_text = std::move(res.output);
  if (res.timed_out) {
    outcome.log_text += "\nBUILD TIMEOUT\n";
    outcome.status = BuildOutcome::Status::Failure;
    return outcome;
  }
  auto binary = cfg_.root_path / cfg_.out_dir / fuzz_target_name;
  std::error_code ec;
  bool produced = res.ok() && std::filesystem::is_regular_file(binary, ec) &&
                  ::access(binary.c_str(), X_OK) == 0;
  if (produced) {
    outcome.status = BuildOutcome::Status::Success;
    outcome.produced_binary = binary;
  }
  return outcome;
}

WorkspaceConfig ProjectWorkspace::clone_into(const WorkspaceConfig& cfg,
                                             const std::filesystem::path& dest) {
  util::copy_tree(cfg.root_path, dest);
  WorkspaceConfig copy = cfg;
  copy.root_path = dest;
  return copy;
}

}  // namespace ha::workspace
