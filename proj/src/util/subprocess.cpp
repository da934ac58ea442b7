#include "util/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>

extern char** environ;

namespace ha::util {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<char*> to_argv(const std::vector<std::string>& args, std::vector<std::string>& keep) {
  keep = args;
  std::vector<char*> out;
  for (auto& s : keep) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

std::vector<char*> to_envp(const EnvMap& env, std::vector<std::string>& keep) {
  keep.clear();
  for (const auto& [k, v] : env) keep.push_back(k + "=" + v);
  std::vector<char*> out;
  for (auto& s : keep) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

[[noreturn]] void child_exec(const std::vector<std::string>& argv,
                             const std::optional<std::filesystem::path>& cwd,
                             const std::optional<EnvMap>& env) {
  if (cwd && chdir(cwd->c_str()) != 0) _exit(127);
  std::vector<std::string> argv_keep, env_keep;
  auto cargv = to_argv(argv, argv_keep);
  if (env) {
    auto cenv = to_envp(*env, env_keep);
    execvpe(cargv[0], cargv.data(), cenv.data());
  } else {
    execvp(cargv[0], cargv.data());
  }
  _exit(127);
}

// Keeps at most `cap` bytes, dropping from the front.
struct TailBuffer {
  std::string data;
  size_t cap;
  size_t dropped = 0;

  explicit TailBuffer(size_t cap_bytes) : cap(cap_bytes) {}

  void append(const char* p, size_t n) {
    data.append(p, n);
    if (cap > 0 && data.size() > cap) {
      size_t excess = data.size() - cap;
      data.erase(0, excess);
      dropped += excess;
    }
  }
};

}  // namespace

EnvMap current_env() {
  EnvMap out;
  for (char** e = environ; e && *e; e++) {
    std::string_view kv(*e);
    size_t eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    out[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
  }
  return out;
}

EnvMap merge_env(EnvMap base, const EnvMap& delta, const std::vector<std::string>& append_keys) {
  for (const auto& [k, v] : delta) {
    bool append = std::find(append_keys.begin(), append_keys.end(), k) != append_keys.end();
    auto it = base.find(k);
    if (append && it != base.end() && !it->second.empty() && !v.empty()) {
      it->second += " " + v;
    } else {
      base[k] = v;
    }
  }
  return base;
}

RunResult run_process(const RunOptions& opts) {
  if (opts.argv.empty()) throw std::invalid_argument("run_process: empty argv");

  int out_pipe[2];
  if (pipe(out_pipe) != 0) throw std::runtime_error("pipe failed");

  auto t0 = Clock::now();
  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(out_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    child_exec(opts.argv, opts.cwd, opts.env);
  }
  close(out_pipe[1]);

  RunResult res;
  TailBuffer buf(opts.output_cap_bytes);
  std::string pending_line;
  char chunk[16384];
  bool killed = false;

  auto feed_lines = [&](const char* p, size_t n) {
    if (!opts.on_line) return;
    pending_line.append(p, n);
    size_t start = 0, nl;
    while ((nl = pending_line.find('\n', start)) != std::string::npos) {
      opts.on_line(std::string_view(pending_line).substr(start, nl - start), seconds_since(t0));
      start = nl + 1;
    }
    pending_line.erase(0, start);
  };

  while (true) {
    int timeout_ms = -1;
    if (opts.timeout_seconds > 0) {
      double remain = opts.timeout_seconds - seconds_since(t0);
      if (remain <= 0 && !killed) {
        kill(-pid, SIGKILL);
        killed = true;
        res.timed_out = true;
      }
      timeout_ms = killed ? 1000 : static_cast<int>(remain * 1000) + 1;
    }
    struct pollfd pfd{out_pipe[0], POLLIN, 0};
    int rc = poll(&pfd, 1, timeout_ms);
    if (rc > 0) {
      ssize_t n = read(out_pipe[0], chunk, sizeof(chunk));
      if (n > 0) {
        buf.append(chunk, static_cast<size_t>(n));
        feed_lines(chunk, static_cast<size_t>(n));
        continue;
      }
      if (n < 0 && errno == EINTR) continue;
      break;  // EOF or unreadable pipe
    }
    if (rc == 0 && !killed && opts.timeout_seconds > 0 &&
        seconds_since(t0) >= opts.timeout_seconds) {
      kill(-pid, SIGKILL);
      killed = true;
      res.timed_out = true;
    }
    if (rc < 0 && errno != EINTR) break;
  }
  close(out_pipe[0]);
  if (opts.on_line && !pending_line.empty()) opts.on_line(pending_line, seconds_since(t0));

  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  res.wall_seconds = seconds_since(t0);
  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.signaled = true;
    res.term_signal = WTERMSIG(status);
    res.exit_code = 128 + res.term_signal;
  }
  res.output = std::move(buf.data);
  res.dropped_bytes = buf.dropped;
  if (res.dropped_bytes > 0) {
    res.output.insert(0, "[output truncated: " + std::to_string(res.dropped_bytes) +
                             " leading bytes dropped]\n");
  }
  return res;
}

ChildProcess::~ChildProcess() {
  if (pid_ > 0) kill_hard();
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
}

void ChildProcess::spawn(const std::vector<std::string>& argv,
                         const std::optional<std::filesystem::path>& cwd,
                         const std::optional<EnvMap>& env) {
  if (argv.empty()) throw std::invalid_argument("ChildProcess::spawn: empty argv");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw std::runtime_error("pipe failed");
  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    child_exec(argv, cwd, env);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  // Writes to a dead child surface as errors, not SIGPIPE.
  signal(SIGPIPE, SIG_IGN);
}

bool ChildProcess::running() {
  if (pid_ <= 0) return false;
  int status = 0;
  pid_t r = waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    pid_ = -1;
    return false;
  }
  return r == 0;
}

void ChildProcess::write_all(std::string_view data) {
  size_t off = 0;
  while (off < data.size()) {
    ssize_t n = write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("write to child failed: " + std::string(strerror(errno)));
    }
    off += static_cast<size_t>(n);
  }
}

std::optional<std::string> ChildProcess::read_some(double timeout_seconds) {
  struct pollfd pfd{from_child_, POLLIN, 0};
  int rc = poll(&pfd, 1, static_cast<int>(timeout_seconds * 1000));
  if (rc == 0) return std::nullopt;
  if (rc < 0) {
    if (errno == EINTR) return std::nullopt;
    throw std::runtime_error("poll failed");
  }
  char chunk[65536];
  ssize_t n = read(from_child_, chunk, sizeof(chunk));
  if (n < 0) {
    if (errno == EINTR) return std::nullopt;
    throw std::runtime_error("read from child failed");
  }
  return std::string(chunk, static_cast<size_t>(n));
}

void ChildProcess::kill_hard() {
  if (pid_ <= 0) return;
  kill(-pid_, SIGKILL);
  kill(pid_, SIGKILL);
  int status = 0;
  waitpid(pid_, &status, 0);
  pid_ = -1;
}

void ChildProcess::close_stdin() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = -1;
  }
}

}  // namespace ha::util
