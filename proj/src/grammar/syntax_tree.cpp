#include "grammar/syntax_tree.hpp"

#include <cstring>

#include "util/text.hpp"

extern "C" {
const TSLanguage* tree_sitter_c();
const TSLanguage* tree_sitter_cpp();
}

namespace ha::grammar {

namespace {

bool type_is(TSNode n, const char* t) {
  return !ts_node_is_null(n) && std::strcmp(ts_node_type(n), t) == 0;
}

TSNode field(TSNode n, const char* name) {
  return ts_node_child_by_field_name(n, name, static_cast<uint32_t>(std::strlen(name)));
}

TSNode first_named_child(TSNode n) {
  uint32_t count = ts_node_named_child_count(n);
  return count > 0 ? ts_node_named_child(n, 0) : TSNode{};
}

}  // namespace

Language language_for_path(const std::filesystem::path& p, Language fallback) {
  std::string ext = p.extension().string();
  if (ext == ".c") return Language::C;
  if (ext == ".cc" || ext == ".cpp" || ext == ".cxx" || ext == ".C" || ext == ".hpp" ||
      ext == ".hh" || ext == ".hxx")
    return Language::CPP;
  return fallback;
}

SyntaxTree::SyntaxTree(std::string source, TSTree* tree, Language lang)
    : source_(std::move(source)), tree_(tree), lang_(lang) {}

SyntaxTree::~SyntaxTree() {
  if (tree_) ts_tree_delete(tree_);
}

std::shared_ptr<const SyntaxTree> SyntaxTree::parse(std::string source, Language lang) {
  TSParser* parser = ts_parser_new();
  ts_parser_set_language(parser, lang == Language::C ? tree_sitter_c() : tree_sitter_cpp());
  TSTree* tree = ts_parser_parse_string(parser, nullptr, source.data(),
                                        static_cast<uint32_t>(source.size()));
  ts_parser_delete(parser);
  if (!tree) return nullptr;
  return std::shared_ptr<const SyntaxTree>(new SyntaxTree(std::move(source), tree, lang));
}

TSNode SyntaxTree::root() const { return ts_tree_root_node(tree_); }

bool SyntaxTree::has_errors() const { return ts_node_has_error(root()); }

std::string_view SyntaxTree::text(TSNode n) const {
  if (ts_node_is_null(n)) return {};
  uint32_t a = ts_node_start_byte(n), b = ts_node_end_byte(n);
  return std::string_view(source_).substr(a, b - a);
}

uint32_t start_line(TSNode n) { return ts_node_start_point(n).row + 1; }
uint32_t end_line(TSNode n) { return ts_node_end_point(n).row + 1; }
uint32_t start_column(TSNode n) { return ts_node_start_point(n).column + 1; }

bool same_node(TSNode a, TSNode b) { return ts_node_eq(a, b); }

std::string_view node_type(TSNode n) {
  return ts_node_is_null(n) ? std::string_view{} : std::string_view(ts_node_type(n));
}

bool is_function_definition(TSNode n) { return type_is(n, "function_definition"); }

bool is_call_expression(TSNode n) { return type_is(n, "call_expression"); }

bool is_comment(TSNode n) { return type_is(n, "comment"); }

bool is_string_like(TSNode n) {
  auto t = node_type(n);
  return t == "string_literal" || t == "string_content" || t == "char_literal" ||
         t == "character" || t == "system_lib_string" || t == "raw_string_literal" ||
         t == "concatenated_string";
}

bool is_identifier_like(TSNode n) {
  auto t = node_type(n);
  return t == "identifier" || t == "type_identifier" || t == "field_identifier" ||
         t == "namespace_identifier" || t == "destructor_name" || t == "operator_name";
}

bool is_declaration_like(TSNode n) {
  auto t = node_type(n);
  return t == "declaration" || t == "type_definition" || t == "field_declaration" ||
         t == "enumerator" || t == "preproc_def" || t == "preproc_function_def";
}

bool is_record_specifier(TSNode n) {
  auto t = node_type(n);
  return t == "struct_specifier" || t == "class_specifier" || t == "union_specifier" ||
         t == "enum_specifier";
}

bool record_has_body(TSNode specifier) { return !ts_node_is_null(field(specifier, "body")); }

std::optional<TSNode> declarator_name_node(TSNode declarator) {
  TSNode d = declarator;
  for (int depth = 0; depth < 32 && !ts_node_is_null(d); depth++) {
    if (is_identifier_like(d)) return d;
    auto t = node_type(d);
    if (t == "qualified_identifier" || t == "template_function" || t == "template_type") {
      d = field(d, "name");
      continue;
    }
    TSNode inner = field(d, "declarator");
    if (!ts_node_is_null(inner)) {
      d = inner;
      continue;
    }
    if (t == "parenthesized_declarator" || t == "parenthesized_expression" ||
        t == "reference_declarator") {
      d = first_named_child(d);
      continue;
    }
    break;
  }
  return std::nullopt;
}

std::optional<TSNode> function_name_node(TSNode function_definition) {
  TSNode d = field(function_definition, "declarator");
  if (ts_node_is_null(d)) return std::nullopt;
  return declarator_name_node(d);
}

std::optional<TSNode> callee_name_node(TSNode call_expression) {
  TSNode f = field(call_expression, "function");
  for (int depth = 0; depth < 32 && !ts_node_is_null(f); depth++) {
    if (is_identifier_like(f)) return f;
    auto t = node_type(f);
    if (t == "field_expression") {
      f = field(f, "field");
      continue;
    }
    if (t == "qualified_identifier" || t == "template_function") {
      f = field(f, "name");
      continue;
    }
    if (t == "parenthesized_expression") {
      f = first_named_child(f);
      continue;
    }
    if (t == "pointer_expression") {
      f = field(f, "argument");
      continue;
    }
    break;
  }
  return std::nullopt;
}

std::vector<TSNode> declared_name_nodes(TSNode decl) {
  std::vector<TSNode> names;
  auto t = node_type(decl);
  if (t == "enumerator" || t == "preproc_def" || t == "preproc_function_def") {
    TSNode n = field(decl, "name");
    if (!ts_node_is_null(n)) names.push_back(n);
    return names;
  }
  if (t != "declaration" && t != "type_definition" && t != "field_declaration") return names;
  TSNode type_child = field(decl, "type");
  uint32_t count = ts_node_named_child_count(decl);
  for (uint32_t i = 0; i < count; i++) {
    TSNode c = ts_node_named_child(decl, i);
    if (!ts_node_is_null(type_child) && same_node(c, type_child)) continue;
    if (is_comment(c)) continue;
    auto ct = node_type(c);
    if (ct == "init_declarator") {
      TSNode inner = field(c, "declarator");
      if (auto n = declarator_name_node(inner)) names.push_back(*n);
      continue;
    }
    if (ct == "storage_class_specifier" || ct == "type_qualifier" || ct == "attribute_specifier" ||
        ct == "ms_declspec_modifier" || ct == "attribute_declaration")
      continue;
    if (auto n = declarator_name_node(c)) names.push_back(*n);
  }
  return names;
}

TSNode descendant_at(const SyntaxTree& t, uint32_t line, uint32_t column) {
  TSPoint p{line > 0 ? line - 1 : 0, column > 0 ? column - 1 : 0};
  return ts_node_named_descendant_for_point_range(t.root(), p, p);
}

std::shared_ptr<const SyntaxTree> TreeCache::get(const std::string& path_key,
                                                 std::string_view content, Language lang) {
  uint64_t h = util::fnv1a64(content, lang == Language::C ? 0xc0de0001u : 0xc0de0002u);
  std::lock_guard<std::mutex> lock(mu_);
  auto key = std::make_pair(path_key, h);
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  auto tree = SyntaxTree::parse(std::string(content), lang);
  entries_[key] = tree;
  return tree;
}

}  // namespace ha::grammar
