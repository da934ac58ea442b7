#include <doctest.h>

#include <filesystem>

#include "util/fs.hpp"
#include "workspace/workspace.hpp"

namespace fs = std::filesystem;
using namespace ha;
using namespace ha::workspace;

namespace {

fs::path fixture_root() {
  return fs::path(FIXTURE_DIR) / "cproj";
}

WorkspaceConfig cloned_fixture(const fs::path& scratch) {
  WorkspaceConfig cfg;
  cfg.root_path = fixture_root();
  cfg.build_command = {"./build.sh"};
  return ProjectWorkspace::clone_into(cfg, scratch);
}

}  // namespace

TEST_CASE("discover_harness_slots finds definitions only, in path order") {
  auto scratch = util::make_temp_dir("ha-ws");
  auto cfg = cloned_fixture(scratch / "proj");
  // A file that only declares the entry point must not become a slot.
  util::write_file(cfg.root_path / "fuzz" / "decl_only.c",
                   "#include <stddef.h>\n#include <stdint.h>\n"
                   "int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size);\n");
  ProjectWorkspace ws(cfg);
  auto slots = ws.discover_harness_slots();
  REQUIRE(slots.size() == 2);
  CHECK(slots[0].slot_id == "fuzz/parse_fuzz.c");
  CHECK(slots[0].fuzz_target_name == "parse_fuzz");
  CHECK(slots[1].slot_id == "fuzz/render_fuzz.c");
  CHECK(!slots[0].original_bytes.empty());
  fs::remove_all(scratch);
}

TEST_CASE("slot filter restricts discovery") {
  auto scratch = util::make_temp_dir("ha-ws");
  auto cfg = cloned_fixture(scratch / "proj");
  cfg.slot_filter = {"fuzz/parse_fuzz.c"};
  ProjectWorkspace ws(cfg);
  auto slots = ws.discover_harness_slots();
  REQUIRE(slots.size() == 1);
  CHECK(slots[0].slot_id == "fuzz/parse_fuzz.c");
  fs::remove_all(scratch);
}

TEST_CASE("substitute and restore round-trip byte-exact") {
  auto scratch = util::make_temp_dir("ha-ws");
  auto cfg = cloned_fixture(scratch / "proj");
  ProjectWorkspace ws(cfg);
  auto slots = ws.discover_harness_slots();
  REQUIRE(!slots.empty());
  const auto& slot = slots[0];

  ws.substitute_harness(slot, "/* replaced */\n");
  CHECK(util::read_file(slot.source_path) == "/* replaced */\n");
  CHECK(ws.is_substituted(slot.slot_id));
  CHECK_THROWS_AS(ws.substitute_harness(slot, "again"), SlotConflict);

  ws.restore_slot(slot);
  CHECK(util::read_file(slot.source_path) == slot.original_bytes);
  auto again = ws.discover_harness_slots();
  REQUIRE(again.size() == slots.size());
  CHECK(again[0].original_bytes == slots[0].original_bytes);
  fs::remove_all(scratch);
}

TEST_CASE("run_build succeeds on the pristine fixture and honors env append") {
  auto scratch = util::make_temp_dir("ha-ws");
  auto cfg = cloned_fixture(scratch / "proj");
  ProjectWorkspace ws(cfg);
  auto outcome = ws.run_build({}, "parse_fuzz");
  CHECK(outcome.status == BuildOutcome::Status::Success);
  REQUIRE(outcome.produced_binary);
  CHECK(fs::exists(*outcome.produced_binary));
  fs::remove_all(scratch);
}

TEST_CASE("run_build failure keeps the diagnostic log") {
  auto scratch = util::make_temp_dir("ha-ws");
  auto cfg = cloned_fixture(scratch / "proj");
  ProjectWorkspace ws(cfg);
  auto slots = ws.discover_harness_slots();
  ws.substitute_harness(slots[0],
                        "#include \"codec/message.h\"\n"
                        "int LLVMFuzzerTestOneInput(const unsigned char *d, unsigned long n) {\n"
                        "  totally_undeclared_function(d, n);\n"
                        "  return 0;\n"
                        "}\n");
  auto outcome = ws.run_build({}, slots[0].fuzz_target_name);
  CHECK(outcome.status == BuildOutcome::Status::Failure);
  CHECK(outcome.log_text.find("totally_undeclared_function") != std::string::npos);
  fs::remove_all(scratch);
}

TEST_CASE("run_build times out with a synthetic log line") {
  auto scratch = util::make_temp_dir("ha-ws");
  util::write_file(scratch / "proj" / "build.sh", "#!/bin/sh\nsleep 30\n");
  fs::permissions(scratch / "proj" / "build.sh", fs::perms::owner_all);
  WorkspaceConfig cfg;
  cfg.root_path = scratch / "proj";
  cfg.build_timeout_seconds = 0.5;
  ProjectWorkspace ws(cfg);
  auto outcome = ws.run_build({}, "whatever");
  CHECK(outcome.status == BuildOutcome::Status::Failure);
  CHECK(outcome.log_text.find("BUILD TIMEOUT") != std::string::npos);
  CHECK(outcome.wall_time < 10.0);
  fs::remove_all(scratch);
}

TEST_CASE("flag variables append, everything else overrides") {
  auto scratch = util::make_temp_dir("ha-ws");
  util::write_file(scratch / "proj" / "build.sh",
                   "#!/bin/sh\nmkdir -p \"${OUT:-out}\"\necho \"CFLAGS=[$CFLAGS]\"\n"
                   "echo \"MODE=[$MODE]\"\ntouch \"${OUT:-out}/t\"\nchmod +x \"${OUT:-out}/t\"\n");
  fs::permissions(scratch / "proj" / "build.sh", fs::perms::owner_all);
  WorkspaceConfig cfg;
  cfg.root_path = scratch / "proj";
  cfg.env_overrides = {{"CFLAGS", "-O1"}, {"MODE", "base"}};
  ProjectWorkspace ws(cfg);
  auto outcome = ws.run_build({{"CFLAGS", "-I/x"}, {"MODE", "override"}}, "t");
  CHECK(outcome.status == BuildOutcome::Status::Success);
  CHECK(outcome.log_text.find("CFLAGS=[-O1 -I/x]") != std::string::npos);
  CHECK(outcome.log_text.find("MODE=[override]") != std::string::npos);
  fs::remove_all(scratch);
}
