#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "grammar/syntax_tree.hpp"

namespace ha::validation {

struct CheckResult {
  bool pass = false;
  std::optional<uint32_t> line;  // offending definition / first call site
  std::string evidence;          // offending region text or failure reason
};

/// Fails iff the harness defines a function whose declared name equals the
/// target's terminal name (a local stub would shadow the real
/// implementation). A harness the grammar backend cannot parse cleanly also
/// fails: the check cannot vouch for it.
CheckResult check_fake_definition(const std::string& harness_text, grammar::Language lang,
                                  const std::string& target);

/// Passes iff some call expression's callee terminal name equals the
/// target's terminal name. Qualified callees match on the terminal
/// component. Scans whatever parses, so minor syntax damage elsewhere in
/// the file does not hide an existing call.
CheckResult check_call(const std::string& harness_text, grammar::Language lang,
                       const std::string& target);

}  // namespace ha::validation
