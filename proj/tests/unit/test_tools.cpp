#include <doctest.h>

#include <filesystem>

#include "grammar/retriever.hpp"
#include "lsp/client.hpp"
#include "tools/pool.hpp"
#include "util/fs.hpp"
#include "workspace/workspace.hpp"

namespace fs = std::filesystem;
using namespace ha;
using namespace ha::tools;

namespace {

fs::path fixture_root() { return fs::path(FIXTURE_DIR) / "cproj"; }

std::shared_ptr<const grammar::GrammarRetriever> fixture_grammar() {
  return std::make_shared<grammar::GrammarRetriever>(fixture_root());
}

std::shared_ptr<lsp::LspClient> started_mock_client() {
  lsp::LspConfig cfg;
  cfg.command = {MOCK_LSP_BIN, "--scenario",
                 (fs::path(FIXTURE_DIR) / "lsp" / "cproj_scenario.json").string(), "--root",
                 fixture_root().string()};
  cfg.root = fixture_root();
  auto client = std::make_shared<lsp::LspClient>(cfg);
  client->start();
  return client;
}

ToolRequest make_req(Tool t, std::map<std::string, std::string> args) {
  ToolRequest req;
  req.tool = t;
  req.args = std::move(args);
  req.session_id = "s1";
  return req;
}

}  // namespace

TEST_CASE("tool names round-trip and the registry covers all seven tools") {
  auto reg = ToolPool::registry();
  REQUIRE(reg.size() == kToolCount);
  for (const auto& entry : reg) {
    auto tool = tool_from_name(entry.at("name").get<std::string>());
    REQUIRE(tool.has_value());
    CHECK(to_string(*tool) == entry.at("name").get<std::string>());
  }
  CHECK(!tool_from_name("no_such_tool").has_value());
}

TEST_CASE("response_rate") {
  ToolStats stats;
  CHECK(response_rate(stats, Tool::GetHeaders) == 0.0);

  for (int i = 0; i < 94; ++i) stats.record(Tool::GetHeaders, Backend::LSP, true);
  for (int i = 0; i < 6; ++i) stats.record(Tool::GetHeaders, Backend::None, false);
  CHECK(response_rate(stats, Tool::GetHeaders) == doctest::Approx(0.94));

  auto c = stats.get(Tool::GetHeaders);
  CHECK(c.calls == 100);
  CHECK(c.non_empty == c.lsp_answered + c.grammar_answered);
}

TEST_CASE("grammar-only pool serves the symbol tools") {
  ToolPool pool(fixture_grammar(), nullptr, nullptr);

  SUBCASE("definition") {
    auto r = pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "msg_parse"}}));
    CHECK(r.backend_used == Backend::Grammar);
    CHECK(!r.empty);
    REQUIRE(r.payload.size() == 1);
    CHECK(r.payload[0]["file"] == "src/message.c");
    CHECK(r.payload[0]["start_line"] == 13);
  }

  SUBCASE("declaration") {
    auto r = pool.invoke(make_req(Tool::GetDeclaration, {{"symbol", "msg_parse"}}));
    REQUIRE(r.payload.size() == 1);
    CHECK(r.payload[0]["file"] == "include/codec/message.h");
  }

  SUBCASE("headers") {
    auto r = pool.invoke(make_req(Tool::GetHeaders, {{"symbol", "msg_parse"}}));
    CHECK(r.backend_used == Backend::Grammar);
    CHECK(r.payload == nlohmann::json::array({"include/codec/message.h"}));
  }

  SUBCASE("cross references return calling functions, capped") {
    auto r = pool.invoke(make_req(Tool::GetCrossReferences, {{"symbol", "msg_parse"}}));
    CHECK(r.payload.size() == 4);

    ToolPoolConfig capped;
    capped.crossref_cap = 2;
    ToolPool small(fixture_grammar(), nullptr, nullptr, capped);
    auto r2 = small.invoke(make_req(Tool::GetCrossReferences, {{"symbol", "msg_parse"}}));
    CHECK(r2.payload.size() == 2);
  }

  SUBCASE("unknown symbol comes back empty with no backend") {
    auto r = pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "zz_no_symbol"}}));
    CHECK(r.empty);
    CHECK(r.backend_used == Backend::None);
    CHECK(r.payload == nlohmann::json::array());
  }

  SUBCASE("missing required argument") {
    CHECK_THROWS_AS(pool.invoke(make_req(Tool::GetDefinition, {})), InvalidArgs);
    CHECK_THROWS_AS(pool.invoke(make_req(Tool::GetDefinition, {{"symbol", ""}})), InvalidArgs);
  }
}

TEST_CASE("hybrid pool prefers the language server and falls back per call") {
  auto client = started_mock_client();
  auto grammar_backend = fixture_grammar();
  auto retriever = std::make_shared<lsp::LspRetriever>(client, grammar_backend);
  ToolPool pool(grammar_backend, retriever, nullptr);

  SUBCASE("healthy server answers symbol tools") {
    auto r = pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "msg_parse"}}));
    CHECK(r.backend_used == Backend::LSP);
    REQUIRE(r.payload.size() == 1);
    CHECK(r.payload[0]["file"] == "src/message.c");
    CHECK(r.payload[0]["start_line"] == 13);
  }

  SUBCASE("scenario gap falls back to the grammar backend") {
    // msg_render is absent from the server's symbol table but fully
    // resolvable by parsing.
    auto r = pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "msg_render"}}));
    CHECK(r.backend_used == Backend::Grammar);
    CHECK(!r.empty);
    CHECK(r.payload[0]["file"] == "src/message.c");
  }

  SUBCASE("killed server degrades to grammar answers with identical content") {
    ToolPool reference(grammar_backend, nullptr, nullptr);
    auto expected = reference.invoke(make_req(Tool::GetDefinition, {{"symbol", "msg_parse"}}));

    client->kill();
    auto got = pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "msg_parse"}}));
    CHECK(got.backend_used == Backend::Grammar);
    CHECK(got.payload == expected.payload);
  }

  SUBCASE("stats conserve counts across backends") {
    pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "msg_parse"}}));    // LSP
    pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "msg_render"}}));   // grammar
    pool.invoke(make_req(Tool::GetDefinition, {{"symbol", "zz_no_symbol"}})); // neither
    auto c = pool.stats().get(Tool::GetDefinition);
    CHECK(c.calls == 3);
    CHECK(c.non_empty == 2);
    CHECK(c.lsp_answered == 1);
    CHECK(c.grammar_answered == 1);
    CHECK(pool.stats().total_calls() == 3);
  }

  client->shutdown();
}

TEST_CASE("find_struct_lifecycle classifies the widget helpers") {
  ToolPool pool(fixture_grammar(), nullptr, nullptr);
  auto report = pool.find_struct_lifecycle("widget_t");
  CHECK(report.header == "include/widget/widget.h");

  auto names = [](const std::vector<grammar::ExtractedRegion>& regions) {
    std::vector<std::string> out;
    for (const auto& r : regions)
      out.push_back(r.text.substr(0, r.text.find('(')));
    return out;
  };
  REQUIRE(report.initializers.size() == 2);
  CHECK(report.initializers[0].text.find("widget_new") != std::string::npos);
  CHECK(report.initializers[1].text.find("widget_init") != std::string::npos);
  REQUIRE(report.destructors.size() == 2);
  CHECK(report.destructors[0].text.find("widget_free") != std::string::npos);
  CHECK(report.destructors[1].text.find("widget_close") != std::string::npos);
  REQUIRE(report.related.size() == 1);
  CHECK(report.related[0].text.find("widget_size") != std::string::npos);
  for (const auto& n : names(report.related)) CHECK(n.find("widget_rank") == std::string::npos);

  SUBCASE("unknown type") {
    CHECK_THROWS_AS(pool.find_struct_lifecycle("nonexistent_t"), TypeNotFound);
    auto r = pool.invoke(make_req(Tool::FindStructLifecycle, {{"type", "nonexistent_t"}}));
    CHECK(r.empty);
    CHECK(r.backend_used == Backend::None);
  }

  SUBCASE("invoke payload mirrors the report") {
    auto r = pool.invoke(make_req(Tool::FindStructLifecycle, {{"type", "widget_t"}}));
    CHECK(!r.empty);
    CHECK(r.payload["header"] == "include/widget/widget.h");
    CHECK(r.payload["initializers"].size() == 2);
    CHECK(r.payload["destructors"].size() == 2);
    CHECK(r.payload["related"].size() == 1);
  }
}

TEST_CASE("view_code windows and guards") {
  auto scratch = util::make_temp_dir("ha-view");
  std::string big;
  for (int i = 1; i <= 1000; ++i) big += "int line_" + std::to_string(i) + ";\n";
  util::write_file(scratch / "big.c", big);
  auto retriever = std::make_shared<grammar::GrammarRetriever>(scratch);
  ToolPool pool(retriever, nullptr, nullptr);

  SUBCASE("centered window") {
    auto r = pool.view_code("big.c", 100, 60);
    CHECK(r.start_line == 70);
    CHECK(r.end_line == 130);
    CHECK(!r.complete);
    CHECK(r.text.find("int line_70;") != std::string::npos);
    CHECK(r.text.find("int line_130;") != std::string::npos);
  }

  SUBCASE("clamped near the top") {
    auto r = pool.view_code("big.c", 5, 60);
    CHECK(r.start_line == 1);
    CHECK(r.end_line == 35);
  }

  SUBCASE("clamped near the end") {
    auto r = pool.view_code("big.c", 995, 60);
    CHECK(r.start_line == 965);
    CHECK(r.end_line == 1000);
  }

  SUBCASE("path traversal is rejected") {
    CHECK_THROWS_AS(pool.view_code("../../etc/passwd", 1, 60), PathOutsideWorkspace);
    CHECK_THROWS_AS(pool.invoke(make_req(Tool::ViewCode, {{"path", "../../etc/passwd"},
                                                          {"line", "1"}})),
                    PathOutsideWorkspace);
  }

  SUBCASE("line argument must be a positive integer") {
    CHECK_THROWS_AS(pool.invoke(make_req(Tool::ViewCode, {{"path", "big.c"}, {"line", "abc"}})),
                    InvalidArgs);
    CHECK_THROWS_AS(pool.invoke(make_req(Tool::ViewCode, {{"path", "big.c"}, {"line", "0"}})),
                    InvalidArgs);
  }

  fs::remove_all(scratch);
}

TEST_CASE("find_driver_examples lists harness slots with a byte cap") {
  SUBCASE("fixture drivers") {
    workspace::WorkspaceConfig cfg;
    cfg.root_path = fixture_root();
    auto ws = std::make_shared<workspace::ProjectWorkspace>(cfg);
    ToolPool pool(fixture_grammar(), nullptr, ws);
    auto r = pool.invoke(make_req(Tool::FindDriverExamples, {}));
    REQUIRE(r.payload.size() == 2);
    CHECK(r.payload[0]["path"] == "fuzz/parse_fuzz.c");
    CHECK(r.payload[1]["path"] == "fuzz/render_fuzz.c");
    CHECK(r.payload[0]["text"].get<std::string>().find("msg_parse") != std::string::npos);
  }

  SUBCASE("oversized drivers are truncated with a marker") {
    auto scratch = util::make_temp_dir("ha-drivers");
    std::string driver = "int LLVMFuzzerTestOneInput(const unsigned char *d, unsigned long n) "
                         "{ return 0; }\n";
    driver.append(40 * 1024, 'x');
    util::write_file(scratch / "fuzz.c", driver);

    workspace::WorkspaceConfig cfg;
    cfg.root_path = scratch;
    auto ws = std::make_shared<workspace::ProjectWorkspace>(cfg);
    ToolPool pool(std::make_shared<grammar::GrammarRetriever>(scratch), nullptr, ws);
    auto drivers = pool.find_driver_examples();
    REQUIRE(drivers.size() == 1);
    CHECK(drivers[0].second.size() <= 16 * 1024);
    CHECK(drivers[0].second.substr(drivers[0].second.size() - 11) == "[truncated]");
    fs::remove_all(scratch);
  }

  SUBCASE("no workspace means no examples") {
    ToolPool pool(fixture_grammar(), nullptr, nullptr);
    auto r = pool.invoke(make_req(Tool::FindDriverExamples, {}));
    CHECK(r.empty);
    CHECK(r.payload == nlohmann::json::array());
  }
}
