#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ha::util {

using EnvMap = std::map<std::string, std::string>;

/// Snapshot of this process's environment.
EnvMap current_env();

/// Overlay `delta` onto `base`. Keys listed in `append_keys` are appended
/// (space-separated) instead of replaced; everything else follows
/// rightmost-wins.
EnvMap merge_env(EnvMap base, const EnvMap& delta, const std::vector<std::string>& append_keys);

struct RunOptions {
  std::vector<std::string> argv;
  std::optional<std::filesystem::path> cwd;
  std::optional<EnvMap> env;  // full environment; absent = inherit
  double timeout_seconds = 0;  // 0 = no timeout
  size_t output_cap_bytes = 1 << 20;  // tail-biased cap on captured output
  // Called per completed output line with seconds since launch.
  std::function<void(std::string_view, double)> on_line;
};

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  bool signaled = false;
  int term_signal = 0;
  std::string output;  // stdout+stderr interleaved, tail-biased under the cap
  size_t dropped_bytes = 0;
  double wall_seconds = 0;

  bool ok() const { return !timed_out && !signaled && exit_code == 0; }
};

/// Runs argv[0] with combined stdout/stderr capture. The child gets its own
/// process group; on timeout the whole group is killed.
RunResult run_process(const RunOptions& opts);

/// Long-lived child with pipes on stdin/stdout (stderr inherited).
/// Used for protocol servers; reads are deadline-bounded.
class ChildProcess {
 public:
  ChildProcess() = default;
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void spawn(const std::vector<std::string>& argv,
             const std::optional<std::filesystem::path>& cwd,
             const std::optional<EnvMap>& env);
  bool running();
  void write_all(std::string_view data);
  /// Up to one pipe buffer of output; empty optional on timeout, empty
  /// string on EOF.
  std::optional<std::string> read_some(double timeout_seconds);
  void kill_hard();
  void close_stdin();
  int pid() const { return pid_; }

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

}  // namespace ha::util
