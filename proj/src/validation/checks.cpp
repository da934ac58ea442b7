#include "validation/checks.hpp"

#include <functional>

#include "grammar/retriever.hpp"
#include "util/text.hpp"

namespace ha::validation {

namespace {

std::string terminal_of(const std::string& target) {
  auto parts = grammar::split_qualified(target);
  return parts.empty() ? target : parts.back();
}

void walk(TSNode node, const std::function<void(TSNode)>& visit) {
  visit(node);
  uint32_t n = ts_node_named_child_count(node);
  for (uint32_t i = 0; i < n; ++i) walk(ts_node_named_child(node, i), visit);
}

}  // namespace

CheckResult check_fake_definition(const std::string& harness_text, grammar::Language lang,
                                  const std::string& target) {
  CheckResult r;
  auto tree = grammar::SyntaxTree::parse(harness_text, lang);
  if (!tree || tree->has_errors()) {
    r.pass = false;
    r.evidence = "harness does not parse cleanly; cannot rule out a fake definition";
    return r;
  }
  std::string terminal = terminal_of(target);
  std::optional<TSNode> offender;
  walk(tree->root(), [&](TSNode n) {
    if (offender || !grammar::is_function_definition(n)) return;
    auto name = grammar::function_name_node(n);
    if (name && tree->text(*name) == terminal) offender = n;
  });
  if (offender) {
    r.pass = false;
    r.line = grammar::start_line(*offender);
    r.evidence = util::slice_lines(harness_text, grammar::start_line(*offender),
                                   grammar::end_line(*offender));
    return r;
  }
  r.pass = true;
  return r;
}

CheckResult check_call(const std::string& harness_text, grammar::Language lang,
                       const std::string& target) {
  CheckResult r;
  auto tree = grammar::SyntaxTree::parse(harness_text, lang);
  if (!tree) {
    r.evidence = "harness yields no syntax tree";
    return r;
  }
  std::string terminal = terminal_of(target);
  std::optional<TSNode> site;
  walk(tree->root(), [&](TSNode n) {
    if (site || !grammar::is_call_expression(n)) return;
    auto callee = grammar::callee_name_node(n);
    if (callee && tree->text(*callee) == terminal) site = n;
  });
  if (site) {
    r.pass = true;
    r.line = grammar::start_line(*site);
    r.evidence = std::string(tree->text(*site));
    return r;
  }
  r.evidence = "no call expression invokes '" + terminal + "'";
  return r;
}

}  // namespace ha::validation
