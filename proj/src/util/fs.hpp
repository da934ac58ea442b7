#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ha::util {

/// Reads a whole file as bytes. Throws std::runtime_error on failure.
std::string read_file(const std::filesystem::path& path);

std::optional<std::string> try_read_file(const std::filesystem::path& path);

/// Writes bytes, replacing any existing content. Throws on failure.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// True when `p` resolves to a location inside `root` (traversal guard).
bool path_inside(const std::filesystem::path& root, const std::filesystem::path& p);

/// Root-relative form with forward slashes; falls back to `p` unchanged
/// when it is not under `root`.
std::string relative_to(const std::filesystem::path& root, const std::filesystem::path& p);

/// Recursive copy for per-session working copies.
void copy_tree(const std::filesystem::path& from, const std::filesystem::path& to);

/// Creates a unique directory under the system temp dir.
std::filesystem::path make_temp_dir(const std::string& prefix);

struct WalkOptions {
  std::vector<std::string> extensions;  // with dot, e.g. ".c"; empty = all
  std::vector<std::string> deny_dirs;   // directory names skipped anywhere in the tree
};

/// All regular files under root matching the options, sorted by
/// root-relative path.
std::vector<std::filesystem::path> walk_files(const std::filesystem::path& root,
                                              const WalkOptions& opts);

}  // namespace ha::util
