#include "util/fs.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace fs = std::filesystem;

namespace ha::util {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

std::optional<std::string> try_read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

bool path_inside(const fs::path& root, const fs::path& p) {
  std::error_code ec;
  fs::path abs_root = fs::weakly_canonical(root, ec);
  if (ec) return false;
  fs::path abs_p = fs::weakly_canonical(p.is_absolute() ? p : root / p, ec);
  if (ec) return false;
  auto rit = abs_root.begin();
  auto pit = abs_p.begin();
  for (; rit != abs_root.end(); ++rit, ++pit) {
    if (pit == abs_p.end() || *rit != *pit) return false;
  }
  return true;
}

std::string relative_to(const fs::path& root, const fs::path& p) {
  std::error_code ec;
  fs::path rel = fs::relative(p, root, ec);
  if (ec || rel.empty() || rel.native().starts_with("..")) return p.generic_string();
  return rel.generic_string();
}

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::create_directories(to);
  fs::copy(from, to,
           fs::copy_options::recursive | fs::copy_options::copy_symlinks |
               fs::copy_options::overwrite_existing);
}

fs::path make_temp_dir(const std::string& prefix) {
  static std::mt19937_64 rng{std::random_device{}()};
  fs::path base = fs::temp_directory_path();
  for (int i = 0; i < 64; i++) {
    fs::path cand = base / (prefix + std::to_string(rng() & 0xffffffffULL));
    std::error_code ec;
    if (fs::create_directories(cand, ec) && !ec) return cand;
  }
  throw std::runtime_error("cannot create temp dir with prefix " + prefix);
}

std::vector<fs::path> walk_files(const fs::path& root, const WalkOptions& opts) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) throw std::runtime_error("no such directory: " + root.string());
  auto denied = [&](const fs::path& dir_name) {
    return std::find(opts.deny_dirs.begin(), opts.deny_dirs.end(), dir_name.string()) !=
           opts.deny_dirs.end();
  };
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied), end;
  for (; it != end; ++it) {
    if (it->is_directory()) {
      if (denied(it->path().filename())) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    if (!opts.extensions.empty()) {
      std::string ext = it->path().extension().string();
      if (std::find(opts.extensions.begin(), opts.extensions.end(), ext) ==
          opts.extensions.end())
        continue;
    }
    out.push_back(it->path());
  }
  std::sort(out.begin(), out.end(), [&](const fs::path& a, const fs::path& b) {
    return relative_to(root, a) < relative_to(root, b);
  });
  return out;
}

}  // namespace ha::util
