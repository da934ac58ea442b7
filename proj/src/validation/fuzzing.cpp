#include "validation/fuzzing.hpp"

#include <unistd.h>

#include <cmath>
#include <regex>

#include "util/fs.hpp"
#include "util/subprocess.hpp"
#include "util/text.hpp"

namespace ha::validation {

namespace fs = std::filesystem;

namespace {

// `==123== ERROR: libFuzzer: deadly signal`, `ERROR: AddressSanitizer: SEGV on ...`
const std::regex kErrorLine(
    R"(ERROR: ((?:libFuzzer|AddressSanitizer|UndefinedBehaviorSanitizer|MemorySanitizer|ThreadSanitizer|LeakSanitizer)): ([^\n]+))");
const std::regex kSymbolizedFrame(R"(^\s*#(\d+)\s+0x[0-9a-fA-F]+\s+in\s+(\S+)\s*(.*)$)");
const std::regex kBareFrame(R"(^\s*#(\d+)\s+0x[0-9a-fA-F]+\s+\((\S+)\+(0x[0-9a-fA-F]+)\))");
const std::regex kStatusLine(R"(^#(\d+)\s+(?:INITED|NEW|REDUCE|pulse|DONE|RELOAD)\b.*\bcov: (\d+))");
const std::regex kFinalStats(R"(stat::number_of_executed_units:\s*(\d+))");

std::string crash_kind_from(const std::string& output) {
  std::smatch m;
  if (std::regex_search(output, m, kErrorLine)) {
    std::string detail = m[2].str();
    auto cut = detail.find(" on ");
    if (cut != std::string::npos) detail = detail.substr(0, cut);
    cut = detail.find(" (");
    if (cut != std::string::npos) detail = detail.substr(0, cut);
    return std::string(util::trim(detail));
  }
  return "";
}

// Fills in function names for main-module frames when the engine could not
// symbolize (no llvm-symbolizer on PATH). addr2line ships with binutils.
void symbolize_with_addr2line(std::vector<CrashFrame>& frames, const fs::path& binary) {
  std::vector<size_t> wanted;
  std::vector<std::string> offsets;
  std::string name = binary.filename().string();
  for (size_t i = 0; i < frames.size() && offsets.size() < 24; ++i) {
    if (!frames[i].function.empty()) continue;
    auto plus = frames[i].location.find("+0x");
    if (plus == std::string::npos) continue;
    std::string module = frames[i].location.substr(0, plus);
    if (module != binary.string() && fs::path(module).filename().string() != name) continue;
    wanted.push_back(i);
    offsets.push_back(frames[i].location.substr(plus + 1));
  }
  if (wanted.empty()) return;

  util::RunOptions ro;
  ro.argv = {"addr2line", "-e", binary.string(), "-f", "-C"};
  ro.argv.insert(ro.argv.end(), offsets.begin(), offsets.end());
  ro.timeout_seconds = 20;
  auto run = util::run_process(ro);
  if (run.exit_code != 0) return;
  // Drop the tool's own diagnostics (stderr is interleaved; stale-binutils
  // DWARF warnings would break the function/location pairing).
  std::vector<std::string_view> lines;
  for (auto l : util::split_lines(run.output))
    if (!l.starts_with("addr2line:")) lines.push_back(l);
  // Output alternates: function name line, then file:line line.
  for (size_t k = 0; k < wanted.size(); ++k) {
    size_t fn_line = 2 * k;
    if (fn_line >= lines.size()) break;
    std::string fn(util::trim(lines[fn_line]));
    if (fn.empty() || fn == "??") continue;
    frames[wanted[k]].function = fn;
    if (fn_line + 1 < lines.size()) {
      std::string loc(util::trim(lines[fn_line + 1]));
      if (!loc.empty() && loc != "??:?" && loc != ":?" && loc != "??:0")
        frames[wanted[k]].location = loc;
    }
  }
}

}  // namespace

std::vector<CrashFrame> parse_crash_stack(const std::string& output) {
  std::vector<CrashFrame> frames;
  for (auto line_view : util::split_lines(output)) {
    std::string line(line_view);
    std::smatch m;
    CrashFrame f;
    if (std::regex_search(line, m, kSymbolizedFrame)) {
      f.index = std::stoi(m[1].str());
      f.function = m[2].str();
      f.location = std::string(util::trim(m[3].str()));
    } else if (std::regex_search(line, m, kBareFrame)) {
      f.index = std::stoi(m[1].str());
      f.location = m[2].str() + "+" + m[3].str();
    } else {
      continue;
    }
    // A report restarts frame numbering for each new stack; keep the first.
    if (f.index == 0 && !frames.empty()) break;
    frames.push_back(std::move(f));
  }
  return frames;
}

FuzzRunReport run_fuzz_check(const fs::path& binary, const FuzzOptions& opts) {
  if (!(opts.seconds > 0))
    throw std::invalid_argument("fuzz budget must be a positive number of seconds");
  if (!fs::exists(binary)) throw LaunchFailure("fuzz binary missing: " + binary.string());
  if (access(binary.c_str(), X_OK) != 0)
    throw LaunchFailure("fuzz binary not executable: " + binary.string());

  fs::path work = opts.work_dir.empty() ? util::make_temp_dir("ha-fuzz") : opts.work_dir;
  fs::path corpus = work / "corpus";
  fs::path artifacts = work / "artifacts";
  std::error_code ec;
  fs::remove_all(corpus, ec);
  fs::create_directories(corpus);
  fs::create_directories(artifacts);

  FuzzRunReport report;
  report.corpus_dir = corpus;

  util::RunOptions ro;
  ro.argv = {binary.string(),
             "-max_total_time=" + std::to_string(static_cast<int>(std::ceil(opts.seconds))),
             "-seed=" + std::to_string(opts.seed),
             "-artifact_prefix=" + artifacts.string() + "/",
             "-print_final_stats=1",
             corpus.string()};
  ro.cwd = work;
  if (!opts.extra_env.empty())
    ro.env = util::merge_env(util::current_env(), opts.extra_env, {});
  ro.timeout_seconds = opts.seconds + 30;
  ro.on_line = [&](std::string_view line, double elapsed) {
    std::string s(line);
    std::smatch m;
    if (std::regex_search(s, m, kStatusLine)) {
      uint64_t execs = std::stoull(m[1].str());
      if (execs > report.executions) report.executions = execs;
      report.cov_series.emplace_back(elapsed, std::stoull(m[2].str()));
    }
  };

  auto run = util::run_process(ro);
  report.duration = run.wall_seconds;
  report.raw_output = run.output;

  std::smatch m;
  if (std::regex_search(run.output, m, kFinalStats)) {
    uint64_t execs = std::stoull(m[1].str());
    if (execs > report.executions) report.executions = execs;
  }

  if (run.timed_out) {
    report.crashed = true;
    report.crash_kind = "hang (engine did not exit within its budget)";
  } else if (!run.ok()) {
    report.crashed = true;
    std::string kind = crash_kind_from(run.output);
    if (kind.empty())
      kind = run.signaled ? "terminated by signal " + std::to_string(run.term_signal)
                          : "abnormal exit (code " + std::to_string(run.exit_code) + ")";
    report.crash_kind = kind;
  }
  if (report.crashed) {
    report.crash_stack = parse_crash_stack(run.output);
    symbolize_with_addr2line(report.crash_stack, binary);
  }
  return report;
}

bool check_coverage_increase(const FuzzRunReport& report) {
  if (report.cov_series.empty())
    throw std::invalid_argument("coverage check needs at least one engine status sample");
  return report.cov_series.back().second > report.cov_series.front().second;
}

}  // namespace ha::validation
