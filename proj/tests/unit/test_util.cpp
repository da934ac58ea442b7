#include <doctest.h>

#include <filesystem>

#include "util/fs.hpp"
#include "util/subprocess.hpp"
#include "util/text.hpp"

namespace fs = std::filesystem;
using namespace ha::util;

TEST_CASE("split_lines handles CRLF and trailing newline") {
  auto lines = split_lines("a\r\nb\nc");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "a");
  CHECK(lines[1] == "b");
  CHECK(lines[2] == "c");
  CHECK(split_lines("x\n").size() == 1);
  CHECK(split_lines("").empty());
}

TEST_CASE("find_identifier_columns respects word boundaries") {
  auto cols = find_identifier_columns("foo foofoo foo(", "foo");
  REQUIRE(cols.size() == 2);
  CHECK(cols[0] == 1);
  CHECK(cols[1] == 12);
  CHECK(find_identifier_columns("xfoo foox", "foo").empty());
  auto at_end = find_identifier_columns("bar", "bar");
  REQUIRE(at_end.size() == 1);
  CHECK(at_end[0] == 1);
}

TEST_CASE("slice_lines is 1-based inclusive and clamps") {
  std::string text = "l1\nl2\nl3\nl4";
  CHECK(slice_lines(text, 2, 3) == "l2\nl3");
  CHECK(slice_lines(text, 1, 99) == text);
  CHECK(slice_lines(text, 4, 4) == "l4");
}

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  // Chaining via the seed equals hashing the concatenation.
  CHECK(fnv1a64("bar", fnv1a64("foo")) == fnv1a64("foobar"));
}

TEST_CASE("merge_env appends flag variables and overrides the rest") {
  EnvMap base{{"CFLAGS", "-O1"}, {"PATH", "/bin"}};
  EnvMap delta{{"CFLAGS", "-Ifoo"}, {"PATH", "/usr/bin"}, {"NEW", "1"}};
  auto merged = merge_env(base, delta, {"CFLAGS", "CXXFLAGS"});
  CHECK(merged["CFLAGS"] == "-O1 -Ifoo");
  CHECK(merged["PATH"] == "/usr/bin");
  CHECK(merged["NEW"] == "1");
  // Append into an absent key just sets it.
  auto merged2 = merge_env({}, {{"CXXFLAGS", "-Ibar"}}, {"CXXFLAGS"});
  CHECK(merged2["CXXFLAGS"] == "-Ibar");
}

TEST_CASE("run_process captures combined output and exit codes") {
  RunOptions opts;
  opts.argv = {"/bin/sh", "-c", "echo out; echo err 1>&2; exit 3"};
  auto res = run_process(opts);
  CHECK(res.exit_code == 3);
  CHECK(!res.timed_out);
  CHECK(res.output.find("out") != std::string::npos);
  CHECK(res.output.find("err") != std::string::npos);
}

TEST_CASE("run_process kills the whole group on timeout") {
  RunOptions opts;
  opts.argv = {"/bin/sh", "-c", "sleep 30 & sleep 30"};
  opts.timeout_seconds = 0.5;
  auto res = run_process(opts);
  CHECK(res.timed_out);
  CHECK(res.wall_seconds < 5.0);
  CHECK(!res.ok());
}

TEST_CASE("run_process output cap keeps the tail") {
  RunOptions opts;
  opts.argv = {"/bin/sh", "-c", "for i in $(seq 1 2000); do echo line$i; done"};
  opts.output_cap_bytes = 512;
  auto res = run_process(opts);
  CHECK(res.dropped_bytes > 0);
  CHECK(res.output.find("line2000") != std::string::npos);
  CHECK(res.output.find("line1\n") == std::string::npos);
  CHECK(res.output.find("truncated") != std::string::npos);
}

TEST_CASE("run_process streams lines with timestamps") {
  RunOptions opts;
  opts.argv = {"/bin/sh", "-c", "echo a; echo b"};
  std::vector<std::string> seen;
  opts.on_line = [&](std::string_view line, double t) {
    seen.emplace_back(line);
    CHECK(t >= 0.0);
  };
  run_process(opts);
  REQUIRE(seen.size() == 2);
  CHECK(seen[0] == "a");
  CHECK(seen[1] == "b");
}

TEST_CASE("ChildProcess round-trips data and reports liveness") {
  ChildProcess child;
  child.spawn({"/bin/cat"}, std::nullopt, std::nullopt);
  CHECK(child.running());
  child.write_all("hello\n");
  std::string got;
  while (got.find('\n') == std::string::npos) {
    auto chunk = child.read_some(2.0);
    REQUIRE(chunk.has_value());
    REQUIRE(!chunk->empty());
    got += *chunk;
  }
  CHECK(got == "hello\n");
  child.close_stdin();
  auto eof = child.read_some(2.0);
  REQUIRE(eof.has_value());
  CHECK(eof->empty());
  child.kill_hard();
  CHECK(!child.running());
}

TEST_CASE("walk_files filters, prunes and sorts") {
  auto dir = make_temp_dir("ha-walk");
  write_file(dir / "b.c", "b");
  write_file(dir / "a.c", "a");
  write_file(dir / "sub" / "c.h", "c");
  write_file(dir / "skip" / "d.c", "d");
  write_file(dir / "e.txt", "e");
  WalkOptions opts;
  opts.extensions = {".c", ".h"};
  opts.deny_dirs = {"skip"};
  auto files = walk_files(dir, opts);
  REQUIRE(files.size() == 3);
  CHECK(relative_to(dir, files[0]) == "a.c");
  CHECK(relative_to(dir, files[1]) == "b.c");
  CHECK(relative_to(dir, files[2]) == "sub/c.h");
  fs::remove_all(dir);
}

TEST_CASE("path_inside guards against traversal") {
  auto dir = make_temp_dir("ha-inside");
  write_file(dir / "x.txt", "x");
  CHECK(path_inside(dir, dir / "x.txt"));
  CHECK(path_inside(dir, dir / "sub" / "y.txt"));
  CHECK(!path_inside(dir, dir / ".." / "escape.txt"));
  CHECK(!path_inside(dir, "/etc/passwd"));
  fs::remove_all(dir);
}
