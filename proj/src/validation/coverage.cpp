#include "validation/coverage.hpp"

#include <algorithm>
#include <functional>
#include <regex>

#include "util/fs.hpp"
#include "util/subprocess.hpp"
#include "util/text.hpp"

namespace ha::validation {

namespace fs = std::filesystem;
using grammar::Language;
using grammar::SyntaxTree;

namespace {

struct PrototypeInfo {
  std::string text;        // declaration text, trailing ';' stripped
  size_t name_begin = 0;   // byte range of the name token within `text`
  size_t name_end = 0;
  std::vector<std::string> params;  // names in order; empty for (void)
  bool returns_void = false;
};

std::optional<TSNode> find_in(TSNode root, const std::function<bool(TSNode)>& pred) {
  if (pred(root)) return root;
  uint32_t n = ts_node_named_child_count(root);
  for (uint32_t i = 0; i < n; ++i)
    if (auto hit = find_in(ts_node_named_child(root, i), pred)) return hit;
  return std::nullopt;
}

std::optional<PrototypeInfo> parse_prototype(const std::string& decl_text,
                                             const std::string& terminal) {
  auto tree = SyntaxTree::parse(decl_text, Language::C);
  if (!tree || tree->has_errors()) return std::nullopt;

  auto fn_decl = find_in(tree->root(), [&](TSNode n) {
    if (grammar::node_type(n) != "function_declarator") return false;
    auto name = grammar::declarator_name_node(n);
    return name && tree->text(*name) == terminal;
  });
  if (!fn_decl) return std::nullopt;

  // The enclosing declaration node bounds the prototype text.
  TSNode decl = *fn_decl;
  while (!ts_node_is_null(decl) && !grammar::is_declaration_like(decl))
    decl = ts_node_parent(decl);
  if (ts_node_is_null(decl) || grammar::node_type(decl) != "declaration") return std::nullopt;

  // --wrap only intercepts external references; static/inline targets are
  // resolved inside their own translation unit.
  uint32_t decl_children = ts_node_named_child_count(decl);
  for (uint32_t i = 0; i < decl_children; ++i) {
    TSNode child = ts_node_named_child(decl, i);
    auto kind = grammar::node_type(child);
    if (kind == "storage_class_specifier" || kind == "type_qualifier") {
      auto text = tree->text(child);
      if (text == "static" || text == "inline") return std::nullopt;
    }
  }

  PrototypeInfo info;
  auto name = grammar::declarator_name_node(*fn_decl);
  size_t decl_begin = ts_node_start_byte(decl);
  info.text = decl_text.substr(decl_begin, ts_node_end_byte(decl) - decl_begin);
  while (!info.text.empty() && (info.text.back() == ';' || info.text.back() == '\n' ||
                                info.text.back() == ' ' || info.text.back() == '\r'))
    info.text.pop_back();
  info.name_begin = ts_node_start_byte(*name) - decl_begin;
  info.name_end = ts_node_end_byte(*name) - decl_begin;

  TSNode params = ts_node_child_by_field_name(*fn_decl, "parameters", 10);
  if (ts_node_is_null(params)) return std::nullopt;
  uint32_t count = ts_node_named_child_count(params);
  for (uint32_t i = 0; i < count; ++i) {
    TSNode p = ts_node_named_child(params, i);
    auto kind = grammar::node_type(p);
    if (kind == "comment") continue;
    if (kind == "variadic_parameter") return std::nullopt;
    if (kind != "parameter_declaration") return std::nullopt;
    auto pname = grammar::declarator_name_node(p);
    if (!pname) {
      // `(void)` is an empty parameter list; anything else unnamed cannot
      // be forwarded.
      TSNode ptype = ts_node_child_by_field_name(p, "type", 4);
      if (count == 1 && !ts_node_is_null(ptype) && tree->text(ptype) == "void" &&
          ts_node_named_child_count(p) == 1)
        break;
      return std::nullopt;
    }
    info.params.emplace_back(tree->text(*pname));
  }

  // void return: base type `void` with no pointer declarator on the path
  // from the declaration down to the function declarator.
  TSNode rtype = ts_node_child_by_field_name(decl, "type", 4);
  if (!ts_node_is_null(rtype) && tree->text(rtype) == "void") {
    bool pointer = false;
    TSNode cur = ts_node_child_by_field_name(decl, "declarator", 10);
    while (!ts_node_is_null(cur)) {
      if (grammar::node_type(cur) == "pointer_declarator") pointer = true;
      if (grammar::same_node(cur, *fn_decl)) break;
      cur = ts_node_child_by_field_name(cur, "declarator", 10);
    }
    info.returns_void = !pointer;
  }
  return info;
}

std::string rename_prototype(const PrototypeInfo& info, const std::string& prefix) {
  std::string out = info.text;
  out.replace(info.name_begin, info.name_end - info.name_begin,
              prefix + out.substr(info.name_begin, info.name_end - info.name_begin));
  return out;
}

}  // namespace

std::string find_include_directive(const fs::path& root, const std::string& header_rel) {
  static const std::regex kInclude(R"(^\s*#\s*include\s*([<"])([^">]+)[">])");
  util::WalkOptions wopts;
  wopts.extensions = {".c", ".cc", ".cpp", ".cxx", ".h", ".hh", ".hpp", ".hxx", ".inc"};
  wopts.deny_dirs = {".git", "build", "out", "corpus"};

  std::string best;
  char best_quote = '"';
  for (const auto& path : util::walk_files(root, wopts)) {
    auto content = util::try_read_file(path);
    if (!content) continue;
    for (auto line : util::split_lines(*content)) {
      std::string s(line);
      std::smatch m;
      if (!std::regex_search(s, m, kInclude)) continue;
      std::string payload = m[2].str();
      bool suffix = header_rel == payload ||
                    (header_rel.size() > payload.size() &&
                     header_rel.compare(header_rel.size() - payload.size(), payload.size(),
                                        payload) == 0 &&
                     header_rel[header_rel.size() - payload.size() - 1] == '/');
      if (suffix && payload.size() > best.size()) {
        best = payload;
        best_quote = m[1].str()[0];
      }
    }
  }
  if (best.empty()) return "#include \"" + fs::path(header_rel).filename().string() + "\"";
  if (best_quote == '<') return "#include <" + best + ">";
  return "#include \"" + best + "\"";
}

std::optional<WrapShim> generate_wrap_shim(const std::string& decl_text,
                                           const std::string& target_terminal,
                                           const std::vector<std::string>& include_lines) {
  auto proto = parse_prototype(decl_text, target_terminal);
  if (!proto) return std::nullopt;

  std::string args = util::join(proto->params, ", ");
  std::string real_call = "__real_" + target_terminal + "(" + args + ")";

  std::string src;
  src += "#include <stddef.h>\n#include <stdint.h>\n#include <stdio.h>\n";
  src += "#include <stdlib.h>\n#include <string.h>\n\n";
  for (const auto& inc : include_lines) src += inc + "\n";
  src += "\n";
  src += "extern uint8_t __start___sancov_cntrs[];\n";
  src += "extern uint8_t __stop___sancov_cntrs[];\n\n";
  src += "/* Runtime callbacks normally provided by the fuzzing engine. */\n";
  src += "void __sanitizer_cov_8bit_counters_init(uint8_t *start, uint8_t *stop) {\n";
  src += "  (void)start;\n  (void)stop;\n}\n";
  src += "void __sanitizer_cov_pcs_init(const uintptr_t *beg, const uintptr_t *end) {\n";
  src += "  (void)beg;\n  (void)end;\n}\n\n";
  src += "static unsigned char *ha_shim_seen;\n";
  src += "static unsigned long long ha_shim_entered;\n\n";
  src += rename_prototype(*proto, "__real_") + ";\n\n";
  src += rename_prototype(*proto, "__wrap_") + " {\n";
  src += "  size_t ha_shim_n = (size_t)(__stop___sancov_cntrs - __start___sancov_cntrs);\n";
  src += "  size_t ha_shim_i;\n";
  if (proto->returns_void) {
    src += "  if (!ha_shim_seen) {\n    " + real_call + ";\n    return;\n  }\n";
  } else {
    src += "  if (!ha_shim_seen) return " + real_call + ";\n";
  }
  src += "  memset(__start___sancov_cntrs, 0, ha_shim_n);\n";
  src += "  ha_shim_entered++;\n";
  if (proto->returns_void) {
    src += "  " + real_call + ";\n";
  } else {
    src += "  __typeof__(" + real_call + ") ha_shim_ret = " + real_call + ";\n";
  }
  src += "  for (ha_shim_i = 0; ha_shim_i < ha_shim_n; ha_shim_i++)\n";
  src += "    if (__start___sancov_cntrs[ha_shim_i]) ha_shim_seen[ha_shim_i] = 1;\n";
  if (proto->returns_void) {
    src += "}\n\n";
  } else {
    src += "  return ha_shim_ret;\n}\n\n";
  }
  src += "extern int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size);\n";
  src += "int LLVMFuzzerInitialize(int *argc, char ***argv) __attribute__((weak));\n\n";
  src += "int main(int argc, char **argv) {\n";
  src += "  size_t ha_shim_n = (size_t)(__stop___sancov_cntrs - __start___sancov_cntrs);\n";
  src += "  int a;\n";
  src += "  if (argc > 1 && strcmp(argv[1], \"--sancov-probe\") == 0) {\n";
  src += "    printf(\"sancov-shim: counters=%zu\\n\", ha_shim_n);\n";
  src += "    return 0;\n  }\n";
  src += "  if (LLVMFuzzerInitialize) LLVMFuzzerInitialize(&argc, &argv);\n";
  src += "  ha_shim_seen = calloc(ha_shim_n ? ha_shim_n : 1, 1);\n";
  src += "  for (a = 1; a < argc; a++) {\n";
  src += "    static unsigned char ha_shim_buf[1 << 20];\n";
  src += "    FILE *f = fopen(argv[a], \"rb\");\n";
  src += "    size_t got, i;\n";
  src += "    unsigned long long before = ha_shim_entered;\n";
  src += "    int first = 1;\n";
  src += "    if (!f) continue;\n";
  src += "    got = fread(ha_shim_buf, 1, sizeof(ha_shim_buf), f);\n";
  src += "    fclose(f);\n";
  src += "    memset(ha_shim_seen, 0, ha_shim_n);\n";
  src += "    LLVMFuzzerTestOneInput(ha_shim_buf, got);\n";
  src += "    printf(\"sancov-shim: input=%s entered=%llu indices=\", argv[a],\n";
  src += "           ha_shim_entered - before);\n";
  src += "    for (i = 0; i < ha_shim_n; i++)\n";
  src += "      if (ha_shim_seen[i]) {\n";
  src += "        printf(first ? \"%zu\" : \",%zu\", i);\n";
  src += "        first = 0;\n      }\n";
  src += "    printf(\"\\n\");\n";
  src += "    fflush(stdout);\n  }\n";
  src += "  return 0;\n}\n";

  WrapShim shim;
  shim.target = target_terminal;
  shim.source = std::move(src);
  return shim;
}

std::optional<WrapShim> build_measure_shim(const grammar::GrammarRetriever& retriever,
                                           const std::string& qualified_target) {
  auto parts = grammar::split_qualified(qualified_target);
  if (parts.empty()) return std::nullopt;
  const std::string& terminal = parts.back();

  auto decls = retriever.classify_and_extract(qualified_target, grammar::Facet::Declaration);
  for (const auto& region : decls) {
    std::vector<std::string> includes = {
        find_include_directive(retriever.root(), region.file)};
    if (auto shim = generate_wrap_shim(region.text, terminal, includes)) return shim;
  }
  return std::nullopt;
}

TargetCoverage measure_target_function_coverage(const fs::path& instrumented_binary,
                                                const fs::path& corpus_dir,
                                                const std::string& target,
                                                double timeout_seconds) {
  auto parts = grammar::split_qualified(target);
  TargetCoverage cov;
  cov.function = parts.empty() ? target : parts.back();

  std::vector<fs::path> inputs;
  if (fs::is_directory(corpus_dir))
    for (const auto& entry : fs::directory_iterator(corpus_dir))
      if (entry.is_regular_file()) inputs.push_back(entry.path());
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty())
    throw std::invalid_argument("coverage measurement needs a non-empty corpus: " +
                                corpus_dir.string());

  static const std::regex kProbe(R"(sancov-shim: counters=(\d+))");
  util::RunOptions probe;
  probe.argv = {instrumented_binary.string(), "--sancov-probe"};
  probe.timeout_seconds = 15;
  auto probe_run = util::run_process(probe);
  std::smatch m;
  if (!probe_run.ok() || !std::regex_search(probe_run.output, m, kProbe) ||
      std::stoull(m[1].str()) == 0)
    throw ShimMissing("binary lacks the counter probe; built without the measurement shim? " +
                      instrumented_binary.string());

  util::RunOptions ro;
  ro.argv = {instrumented_binary.string()};
  for (const auto& p : inputs) ro.argv.push_back(p.string());
  ro.timeout_seconds = timeout_seconds;
  auto run = util::run_process(ro);

  static const std::regex kInputLine(R"(sancov-shim: input=(\S+) entered=(\d+) indices=([0-9,]*))");
  for (auto line_view : util::split_lines(run.output)) {
    std::string line(line_view);
    if (!std::regex_search(line, m, kInputLine)) continue;
    std::string id = fs::path(m[1].str()).filename().string();
    cov.entered_total += std::stoull(m[2].str());
    std::set<uint32_t> indices;
    for (const auto& tok : util::split(m[3].str(), ',')) {
      if (tok.empty()) continue;
      uint32_t idx = static_cast<uint32_t>(std::stoul(tok));
      indices.insert(idx);
      cov.union_indices.insert(idx);
    }
    cov.per_input.emplace_back(std::move(id), std::move(indices));
  }
  return cov;
}

}  // namespace ha::validation
