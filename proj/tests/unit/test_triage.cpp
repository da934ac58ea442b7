#include <doctest.h>

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <map>

#include "triage/triage.hpp"
#include "util/fs.hpp"

namespace fs = std::filesystem;
using namespace ha;
using namespace ha::triage;

namespace {

const PatternTable& table() {
  static PatternTable t = PatternTable::load_default();
  return t;
}

ClassifyContext ctx_for(const std::string& harness_path, const std::string& harness_text = "",
                        std::map<std::string, std::string> decls = {}) {
  ClassifyContext ctx;
  ctx.harness_rel_path = harness_path;
  ctx.harness_text = harness_text;
  ctx.find_decl_header = [decls](const std::string& sym) -> std::optional<std::string> {
    auto it = decls.find(sym);
    if (it == decls.end()) return std::nullopt;
    return it->second;
  };
  return ctx;
}

std::vector<Diagnostic> run(const std::string& log, const ClassifyContext& ctx) {
  auto diags = parse_build_log(table(), log);
  classify(diags, ctx);
  return diags;
}

}  // namespace

TEST_CASE("pattern table: default parses and file copy stays in sync") {
  const auto& def = table();
  CHECK(def.version() == 1);
  CHECK(def.patterns().size() >= 10);

  auto file = PatternTable::load_file(fs::path(DATA_DIR) / "triage_patterns.json");
  REQUIRE(file.patterns().size() == def.patterns().size());
  CHECK(file.version() == def.version());
  for (size_t i = 0; i < def.patterns().size(); ++i) {
    const auto& a = def.patterns()[i];
    const auto& b = file.patterns()[i];
    CAPTURE(a.name);
    CHECK(a.name == b.name);
    CHECK(a.regex_text == b.regex_text);
    CHECK(a.candidate == b.candidate);
    CHECK(a.captures == b.captures);
  }
}

TEST_CASE("parse_build_log: line shapes and captures") {
  SUBCASE("empty log") { CHECK(parse_build_log(table(), "").empty()); }

  SUBCASE("clean log") {
    auto diags = parse_build_log(table(), "cc -c foo.c\nar rcs libfoo.a foo.o\ndone\n");
    CHECK(diags.empty());
  }

  SUBCASE("compiler error line carries file, line, message") {
    auto diags = parse_build_log(
        table(), "fuzz/driver.c:12:5: error: call to undeclared function 'dns_message_destroy'");
    REQUIRE(diags.size() == 1);
    REQUIRE(diags[0].file.has_value());
    CHECK(*diags[0].file == "fuzz/driver.c");
    REQUIRE(diags[0].line.has_value());
    CHECK(*diags[0].line == 12);
    CHECK(diags[0].message == "call to undeclared function 'dns_message_destroy'");
    REQUIRE(diags[0].symbol.has_value());
    CHECK(*diags[0].symbol == "dns_message_destroy");
    CHECK(diags[0].severity == Diagnostic::Severity::Error);
  }

  SUBCASE("linker line carries symbol") {
    auto diags = parse_build_log(table(), "undefined reference to 'bpf_open_mem'");
    REQUIRE(diags.size() == 1);
    REQUIRE(diags[0].symbol.has_value());
    CHECK(*diags[0].symbol == "bpf_open_mem");
  }

  SUBCASE("inclusion line carries missing path") {
    auto diags = parse_build_log(table(), "'lwip/opt.h' file not found");
    REQUIRE(diags.size() == 1);
    REQUIRE(diags[0].missing_include.has_value());
    CHECK(*diags[0].missing_include == "lwip/opt.h");
  }

  SUBCASE("warning-only line has Warning severity") {
    auto diags =
        parse_build_log(table(), "fuzz/driver.c:2:10: warning: unused variable 'n'");
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Diagnostic::Severity::Warning);
  }

  SUBCASE("unmatched error-looking line becomes a diagnostic") {
    auto diags = parse_build_log(table(), "ERROR: build terminated abnormally");
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Diagnostic::Severity::Error);
  }
}

TEST_CASE("classify: named error families") {
  SUBCASE("bare undefined reference is LinkError") {
    auto diags = run("undefined reference to 'bpf_open_mem'", ctx_for("fuzz/driver.c"));
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].error_class == ErrorClass::LinkError);
  }

  SUBCASE("file-not-found is InclusionError even when located in the harness") {
    auto diags = run("fuzz/driver.c:3:10: fatal error: 'lwip/opt.h' file not found",
                     ctx_for("fuzz/driver.c"));
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].error_class == ErrorClass::InclusionError);
    CHECK(*diags[0].missing_include == "lwip/opt.h");
  }

  SUBCASE("member error in the harness is HarnessCodeError") {
    auto diags =
        run("fuzztest/fuzzmain.c:27:10: error: no member named 'chunk_mode' in 'struct "
            "mg_connection'",
            ctx_for("fuzztest/fuzzmain.c"));
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].error_class == ErrorClass::HarnessCodeError);
    CHECK(*diags[0].line == 27);
  }

  SUBCASE("same error in a non-harness file is BuildScriptError") {
    auto diags = run("src/lib/core.c:44:13: error: expected identifier",
                     ctx_for("fuzz/driver.c"));
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].error_class == ErrorClass::BuildScriptError);
  }
}

TEST_CASE("classify: undeclared-identifier resolution") {
  const std::string line =
      "fuzz/driver.c:4:3: error: use of undeclared identifier 'msg_reset'";

  SUBCASE("declared in a header the harness does not include -> MissingHeaderError") {
    auto diags = run(line, ctx_for("fuzz/driver.c", "#include <stdint.h>\n",
                                   {{"msg_reset", "include/codec/message.h"}}));
    CHECK(diags[0].error_class == ErrorClass::MissingHeaderError);
  }

  SUBCASE("declared in a header the harness already includes -> HarnessCodeError") {
    auto diags = run(line, ctx_for("fuzz/driver.c", "#include \"codec/message.h\"\n",
                                   {{"msg_reset", "include/codec/message.h"}}));
    CHECK(diags[0].error_class == ErrorClass::HarnessCodeError);
  }

  SUBCASE("declared nowhere in the project -> HarnessCodeError") {
    auto diags = run(line, ctx_for("fuzz/driver.c"));
    CHECK(diags[0].error_class == ErrorClass::HarnessCodeError);
  }

  SUBCASE("declared nowhere, error in a project file -> BuildScriptError") {
    auto diags = run("src/core.c:4:3: error: use of undeclared identifier 'msg_reset'",
                     ctx_for("fuzz/driver.c"));
    CHECK(diags[0].error_class == ErrorClass::BuildScriptError);
  }
}

TEST_CASE("overall_class follows precedence and skips warnings") {
  auto ctx = ctx_for("fuzz/driver.c");
  auto diags = run(
      "fuzz/driver.c:2:1: warning: something\n"
      "make: *** [out/driver] Error 1\n"
      "undefined reference to 'x'\n"
      "'a/b.h' file not found\n",
      ctx);
  CHECK(overall_class(diags) == ErrorClass::InclusionError);

  diags = run("make: *** [out/driver] Error 1\nundefined reference to 'x'\n", ctx);
  CHECK(overall_class(diags) == ErrorClass::LinkError);

  diags = run("fuzz/driver.c:2:1: warning: something\n", ctx);
  CHECK(overall_class(diags) == ErrorClass::Unknown);

  CHECK(overall_class({}) == ErrorClass::Unknown);
}

TEST_CASE("labeled corpus classifies with full agreement, quickly") {
  auto corpus_text = util::read_file(fs::path(FIXTURE_DIR) / "triage_corpus.json");
  auto doc = nlohmann::json::parse(corpus_text);
  const auto& entries = doc.at("entries");
  REQUIRE(entries.size() >= 30);

  std::map<std::string, int> by_label;
  auto t0 = std::chrono::steady_clock::now();
  for (const auto& e : entries) {
    std::string name = e.at("name").get<std::string>();
    CAPTURE(name);
    auto want = error_class_from_string(e.at("label").get<std::string>());
    REQUIRE(want.has_value());

    std::map<std::string, std::string> decls;
    if (e.contains("decl_headers"))
      for (auto it = e["decl_headers"].begin(); it != e["decl_headers"].end(); ++it)
        decls[it.key()] = it.value().get<std::string>();
    auto ctx = ctx_for(e.at("harness_path").get<std::string>(),
                       e.contains("harness_text") ? e["harness_text"].get<std::string>() : "",
                       decls);

    auto diags = run(e.at("log").get<std::string>(), ctx);
    CHECK(overall_class(diags) == *want);
    by_label[e.at("label").get<std::string>()]++;
  }
  auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 1.0);

  // All five error families are represented.
  for (const char* label : {"LinkError", "InclusionError", "MissingHeaderError",
                            "HarnessCodeError", "BuildScriptError"}) {
    CAPTURE(label);
    CHECK(by_label[label] >= 5);
  }
}

TEST_CASE("plan_remediation decision procedure") {
  fs::path root = fs::path(FIXTURE_DIR) / "cproj";

  AttemptState first_slot;
  first_slot.all_slots = {"fuzz/a.c", "fuzz/b.c", "fuzz/c.c"};
  first_slot.tried_slots = {"fuzz/a.c"};
  first_slot.current_slot = "fuzz/a.c";

  AttemptState exhausted = first_slot;
  exhausted.tried_slots = {"fuzz/a.c", "fuzz/b.c", "fuzz/c.c"};

  auto ctx = ctx_for("fuzz/a.c");

  SUBCASE("harness errors route to fix before any slot switch") {
    auto diags = run("fuzz/a.c:9:1: error: expected ';' after expression", ctx);
    auto action = plan_remediation(diags, first_slot, root);
    CHECK(action.kind == TriageAction::Kind::RouteToFix);
    REQUIRE(action.diagnostics.size() == 1);
    CHECK(action.diagnostics[0].error_class == ErrorClass::HarnessCodeError);
  }

  SUBCASE("non-harness failure with untried slots switches to the next slot in order") {
    auto diags = run("undefined reference to 'x'", ctx);
    auto action = plan_remediation(diags, first_slot, root);
    CHECK(action.kind == TriageAction::Kind::SwitchSlot);
    CHECK(action.next_slot == "fuzz/b.c");
  }

  SUBCASE("inclusion error with slots exhausted augments include paths") {
    auto diags = run("'checksum/checksum.h' file not found", ctx);
    auto action = plan_remediation(diags, exhausted, root);
    CHECK(action.kind == TriageAction::Kind::AugmentIncludePath);
    REQUIRE(action.include_dirs.size() == 1);
    CHECK(action.include_dirs[0] == "src/internal");
    CHECK(action.unresolved_includes.empty());
  }

  SUBCASE("inclusion error resolving nowhere is recorded and gives up") {
    auto diags = run("'no/such/header.h' file not found", ctx);
    auto action = plan_remediation(diags, exhausted, root);
    CHECK(action.kind == TriageAction::Kind::GiveUp);
    REQUIRE(action.unresolved_includes.size() == 1);
    CHECK(action.unresolved_includes[0] == "no/such/header.h");
  }

  SUBCASE("augmentation happens at most once") {
    auto diags = run("'checksum/checksum.h' file not found", ctx);
    auto state = exhausted;
    state.include_augmentation_done = true;
    auto action = plan_remediation(diags, state, root);
    CHECK(action.kind == TriageAction::Kind::GiveUp);
  }

  SUBCASE("missing header attaches driver examples once") {
    auto mh_ctx = ctx_for("fuzz/a.c", "#include <stdint.h>\n",
                          {{"msg_render", "include/codec/message.h"}});
    auto diags = run("fuzz/a.c:4:3: error: call to undeclared function 'msg_render'", mh_ctx);
    REQUIRE(diags[0].error_class == ErrorClass::MissingHeaderError);

    auto action = plan_remediation(diags, exhausted, root);
    CHECK(action.kind == TriageAction::Kind::AttachDriverExamples);
    REQUIRE(action.diagnostics.size() == 1);

    auto state = exhausted;
    state.driver_examples_done = true;
    action = plan_remediation(diags, state, root);
    CHECK(action.kind == TriageAction::Kind::GiveUp);
  }

  SUBCASE("link error with slots exhausted routes to fix with a declaration hint") {
    auto diags = run("undefined reference to 'bpf_open_mem'", ctx);
    auto action = plan_remediation(diags, exhausted, root);
    CHECK(action.kind == TriageAction::Kind::RouteToFix);
    CHECK(action.hint.find("declaration") != std::string::npos);
    REQUIRE(action.diagnostics.size() == 1);
    CHECK(*action.diagnostics[0].symbol == "bpf_open_mem");
  }

  SUBCASE("nothing applicable gives up") {
    auto action = plan_remediation({}, exhausted, root);
    CHECK(action.kind == TriageAction::Kind::GiveUp);
  }
}

TEST_CASE("resolve_missing_include_dirs walks the workspace") {
  fs::path root = fs::path(FIXTURE_DIR) / "cproj";
  auto dirs = resolve_missing_include_dirs(root, "checksum/checksum.h");
  REQUIRE(dirs.size() == 1);
  CHECK(dirs[0] == "src/internal");

  dirs = resolve_missing_include_dirs(root, "widget/widget.h");
  REQUIRE(dirs.size() == 1);
  CHECK(dirs[0] == "include");

  CHECK(resolve_missing_include_dirs(root, "zzz.h").empty());
  CHECK(resolve_missing_include_dirs(root, "").empty());

  // A file sitting at the root resolves to ".".
  dirs = resolve_missing_include_dirs(root, "build.sh");
  REQUIRE(dirs.size() == 1);
  CHECK(dirs[0] == ".");
}

TEST_CASE("apply_include_augmentation appends -I flags idempotently") {
  fs::path root = "/ws";
  std::map<std::string, std::string> base{{"CFLAGS", "-O2"}};

  auto out = apply_include_augmentation(base, root, {"src/include"});
  CHECK(out["CFLAGS"] == "-O2 -Isrc/include");
  CHECK(out["CXXFLAGS"] == "-Isrc/include");

  auto again = apply_include_augmentation(out, root, {"src/include"});
  CHECK(again["CFLAGS"] == "-O2 -Isrc/include");
  CHECK(again["CXXFLAGS"] == "-Isrc/include");

  auto two = apply_include_augmentation(base, root, {"a", "b"});
  CHECK(two["CFLAGS"] == "-O2 -Ia -Ib");

  // Absolute dirs inside the workspace are stored root-relative.
  auto abs = apply_include_augmentation(base, root, {"/ws/sub/dir"});
  CHECK(abs["CFLAGS"] == "-O2 -Isub/dir");
}
