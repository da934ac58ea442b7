#include "grammar/retriever.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <stdexcept>

#include "util/fs.hpp"
#include "util/text.hpp"

namespace ha::grammar {

namespace {

constexpr uint32_t kFallbackWindow = 50;

TSNode field(TSNode n, const char* name) {
  return ts_node_child_by_field_name(n, name, static_cast<uint32_t>(std::strlen(name)));
}

std::vector<std::string> split_scope(std::string_view text) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= text.size()) {
    size_t sep = text.find("::", start);
    auto piece = util::trim(text.substr(start, sep == std::string_view::npos ? sep : sep - start));
    if (!piece.empty()) parts.emplace_back(piece);
    if (sep == std::string_view::npos) break;
    start = sep + 2;
  }
  return parts;
}

// Facets an identifier token can satisfy, with the node to extract for each.
struct OccurrenceClass {
  bool definition = false;
  TSNode definition_node{};
  bool declaration = false;
  TSNode declaration_node{};
  bool crossref = false;
  TSNode call_node{};
};

OccurrenceClass classify_occurrence(TSNode id_node) {
  OccurrenceClass oc;
  for (TSNode a = ts_node_parent(id_node); !ts_node_is_null(a); a = ts_node_parent(a)) {
    if (is_call_expression(a) && !oc.crossref) {
      auto callee = callee_name_node(a);
      if (callee && same_node(*callee, id_node)) {
        oc.crossref = true;
        oc.call_node = a;
      }
    }
    if (is_function_definition(a) && !oc.definition) {
      auto name = function_name_node(a);
      if (name && same_node(*name, id_node)) {
        oc.definition = true;
        oc.definition_node = a;
      }
    }
    if (is_declaration_like(a) && !oc.declaration) {
      for (TSNode n : declared_name_nodes(a)) {
        if (same_node(n, id_node)) {
          oc.declaration = true;
          oc.declaration_node = a;
          // A typedef of a full record body also serves definition queries.
          TSNode type_child = field(a, "type");
          if (!oc.definition && is_record_specifier(type_child) && record_has_body(type_child)) {
            oc.definition = true;
            oc.definition_node = a;
          }
          break;
        }
      }
    }
    if (is_record_specifier(a)) {
      TSNode name = field(a, "name");
      if (!ts_node_is_null(name) && same_node(name, id_node)) {
        TSNode wrap = a;
        TSNode p = ts_node_parent(a);
        if (is_declaration_like(p)) wrap = p;
        if (record_has_body(a) && !oc.definition) {
          oc.definition = true;
          oc.definition_node = wrap;
        }
        if (!oc.declaration) {
          oc.declaration = true;
          oc.declaration_node = wrap;
        }
      }
    }
  }
  return oc;
}

bool qualifiers_match(const SyntaxTree& tree, TSNode id_node,
                      const std::vector<std::string>& qualifiers) {
  std::set<std::string> found;
  for (TSNode a = ts_node_parent(id_node); !ts_node_is_null(a); a = ts_node_parent(a)) {
    auto ty = node_type(a);
    if (ty == "qualified_identifier") {
      TSNode scope = field(a, "scope");
      if (!ts_node_is_null(scope))
        for (auto& part : split_scope(tree.text(scope))) found.insert(part);
    } else if (ty == "namespace_definition") {
      TSNode name = field(a, "name");
      if (!ts_node_is_null(name))
        for (auto& part : split_scope(tree.text(name))) found.insert(part);
    } else if (is_record_specifier(a)) {
      TSNode name = field(a, "name");
      if (!ts_node_is_null(name)) found.insert(std::string(tree.text(name)));
    }
  }
  for (const auto& q : qualifiers)
    if (!found.count(q)) return false;
  return true;
}

TSNode nearest_function_ancestor(TSNode n) {
  for (TSNode a = ts_node_parent(n); !ts_node_is_null(a); a = ts_node_parent(a))
    if (is_function_definition(a)) return a;
  return TSNode{};
}

void collect_smallest_function_at(TSNode node, uint32_t line, TSNode* best) {
  if (ts_node_is_null(node)) return;
  if (start_line(node) > line || end_line(node) < line) return;
  if (is_function_definition(node)) *best = node;
  uint32_t count = ts_node_named_child_count(node);
  for (uint32_t i = 0; i < count; i++) collect_smallest_function_at(ts_node_named_child(node, i), line, best);
}

ExtractedRegion make_region(const std::string& rel_file, const SyntaxTree& tree, TSNode node) {
  ExtractedRegion r;
  r.file = rel_file;
  r.start_line = start_line(node);
  r.end_line = end_line(node);
  r.text = util::slice_lines(tree.source(), r.start_line, r.end_line);
  r.complete = true;
  return r;
}

}  // namespace

std::vector<std::string> split_qualified(const std::string& symbol) {
  auto parts = split_scope(symbol);
  if (parts.empty()) parts.push_back(symbol);
  return parts;
}

GrammarRetriever::GrammarRetriever(std::filesystem::path root, RetrieverOptions opts)
    : root_(std::move(root)), opts_(std::move(opts)) {}

std::filesystem::path GrammarRetriever::resolve(const std::filesystem::path& file) const {
  return file.is_absolute() ? file : root_ / file;
}

std::shared_ptr<const SyntaxTree> GrammarRetriever::tree_for(
    const std::filesystem::path& file) const {
  auto abs = resolve(file);
  auto content = util::try_read_file(abs);
  if (!content) return nullptr;
  Language lang = language_for_path(abs, opts_.default_language);
  return cache_.get(abs.generic_string(), *content, lang);
}

std::vector<Occurrence> GrammarRetriever::locate_occurrences(const std::string& symbol) const {
  std::string terminal = split_qualified(symbol).back();
  util::WalkOptions wopts;
  wopts.extensions = opts_.source_extensions;
  wopts.deny_dirs = opts_.deny_dirs;
  std::vector<Occurrence> out;
  for (const auto& path : util::walk_files(root_, wopts)) {
    auto content = util::try_read_file(path);
    if (!content) continue;
    std::string rel = util::relative_to(root_, path);
    auto lines = util::split_lines(*content);
    for (size_t i = 0; i < lines.size(); i++) {
      for (uint32_t col : util::find_identifier_columns(lines[i], terminal)) {
        Occurrence occ;
        occ.file = rel;
        occ.line = static_cast<uint32_t>(i + 1);
        occ.column = col;
        out.push_back(std::move(occ));
      }
    }
  }
  return out;
}

std::vector<ExtractedRegion> GrammarRetriever::classify_and_extract(const std::string& symbol,
                                                                    Facet facet) const {
  auto comps = split_qualified(symbol);
  std::string terminal = comps.back();
  std::vector<std::string> qualifiers(comps.begin(), comps.end() - 1);

  std::vector<ExtractedRegion> out;
  std::set<std::pair<std::string, uint32_t>> seen;
  std::string cur_file;
  std::shared_ptr<const SyntaxTree> tree;
  bool counted_failure = false;

  for (const auto& occ : locate_occurrences(terminal)) {
    if (occ.file != cur_file) {
      cur_file = occ.file;
      tree = tree_for(occ.file);
      counted_failure = false;
    }
    if (!tree) {
      if (!counted_failure) {
        parse_failures_++;
        counted_failure = true;
      }
      continue;
    }
    TSNode id = descendant_at(*tree, occ.line, occ.column);
    if (ts_node_is_null(id) || !is_identifier_like(id)) continue;
    if (tree->text(id) != terminal) continue;
    if (!qualifiers.empty() && !qualifiers_match(*tree, id, qualifiers)) continue;

    OccurrenceClass oc = classify_occurrence(id);
    TSNode region_node{};
    bool hit = false;
    switch (facet) {
      case Facet::Definition:
        if (oc.definition) {
          region_node = oc.definition_node;
          hit = true;
        }
        break;
      case Facet::Declaration:
        if (oc.declaration) {
          region_node = oc.declaration_node;
          hit = true;
        }
        break;
      case Facet::CrossReference:
        if (oc.crossref) {
          TSNode caller = nearest_function_ancestor(oc.call_node);
          if (!ts_node_is_null(caller)) {
            region_node = caller;
            hit = true;
          }
        }
        break;
    }
    if (!hit) continue;
    auto region = make_region(occ.file, *tree, region_node);
    if (seen.insert({region.file, region.start_line}).second) out.push_back(std::move(region));
  }
  std::sort(out.begin(), out.end(), [](const ExtractedRegion& a, const ExtractedRegion& b) {
    return std::tie(a.file, a.start_line) < std::tie(b.file, b.start_line);
  });
  return out;
}

std::optional<ExtractedRegion> GrammarRetriever::enclosing_function(
    const std::filesystem::path& file, uint32_t line) const {
  auto tree = tree_for(file);
  if (!tree) {
    parse_failures_++;
    return std::nullopt;
  }
  TSNode best{};
  collect_smallest_function_at(tree->root(), line, &best);
  if (ts_node_is_null(best)) return std::nullopt;
  std::string rel = util::relative_to(root_, resolve(file));
  return make_region(rel, *tree, best);
}

ExtractedRegion GrammarRetriever::location_to_region(const std::filesystem::path& file,
                                                     uint32_t line) const {
  auto abs = resolve(file);
  auto content = util::try_read_file(abs);
  if (!content) throw std::runtime_error("location_to_region: unreadable file " + abs.string());
  std::string rel = util::relative_to(root_, abs);
  uint32_t total = util::count_lines(*content);

  Language lang = language_for_path(abs, opts_.default_language);
  auto tree = cache_.get(abs.generic_string(), *content, lang);
  if (tree && !tree->has_errors() && line <= total) {
    auto lines = util::split_lines(*content);
    std::string_view lt = lines[line - 1];
    uint32_t col = 1;
    while (col <= lt.size() && (lt[col - 1] == ' ' || lt[col - 1] == '\t')) col++;
    TSNode n = descendant_at(*tree, line, col);
    for (TSNode a = n; !ts_node_is_null(a); a = ts_node_parent(a)) {
      if (is_function_definition(a) || is_declaration_like(a))
        return make_region(rel, *tree, a);
    }
  }

  ExtractedRegion r;
  r.file = rel;
  r.start_line = std::min(line, std::max<uint32_t>(total, 1));
  r.end_line = std::min(r.start_line + kFallbackWindow - 1, std::max<uint32_t>(total, 1));
  r.text = util::slice_lines(*content, r.start_line, r.end_line);
  r.complete = false;
  return r;
}

}  // namespace ha::grammar
