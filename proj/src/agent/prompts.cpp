#include "agent/prompts.hpp"

#include <algorithm>
#include <map>

#include "triage/triage.hpp"
#include "util/text.hpp"

namespace ha::agent {
namespace {

constexpr const char* kNone = "(none available)";

void add_section(std::string& out, const std::string& title, const std::string& body) {
  out += "## " + title + "\n";
  out += body.empty() ? std::string(kNone) : body;
  if (out.back() != '\n') out += '\n';
  out += '\n';
}

std::string fence(const std::string& text, const char* tag = "") {
  std::string out = "```";
  out += tag;
  out += '\n';
  out += text;
  if (!text.empty() && text.back() != '\n') out += '\n';
  out += "```\n";
  return out;
}

std::string join_drivers(const std::vector<std::pair<std::string, std::string>>& drivers) {
  std::string out;
  for (const auto& [path, text] : drivers) {
    out += "Existing driver " + path + ":\n";
    out += fence(text);
  }
  return out;
}

}  // namespace

PromptBundle assemble_generation_prompt(const std::string& target, grammar::Language language,
                                        const GenerationContext& ctx,
                                        const nlohmann::json& tools) {
  bool cpp = language == grammar::Language::CPP;
  std::string body;

  std::string task = "Write a fuzz driver written in the ";
  task += cpp ? "C++" : "C";
  task += " language according to the given information.\n";
  task += "The driver must target the function `" + target + "` and define the entry point\n";
  task += cpp ? "`extern \"C\" int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)`"
              : "`int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)`";
  task +=
      ",\nderiving the call's inputs from the fuzz data. Reply with the complete driver in a "
      "single fenced code block.";
  add_section(body, "Task Description", task);

  std::string headers;
  for (const auto& h : ctx.headers) headers += "#include \"" + h + "\"\n";
  add_section(body, "Header Files", headers);

  std::string examples = join_drivers(ctx.driver_examples);
  if (!ctx.usage_snippets.empty()) {
    examples += "Usage of the target function in the project:\n";
    for (const auto& snippet : ctx.usage_snippets) examples += fence(snippet);
  }
  add_section(body, "Examples", examples);

  std::string info = "Function Declaration:\n";
  info += ctx.declaration_text.empty() ? "(not found in the project)\n"
                                       : fence(ctx.declaration_text);
  info += "Function Definition:\n";
  info += ctx.definition_text.empty() ? "(not found in the project)\n"
                                      : fence(ctx.definition_text);
  info += "Function Documentation:\n";
  info += ctx.documentation.empty() ? std::string(kNone) + "\n" : ctx.documentation;
  add_section(body, "Fuzz Target Function Information", info);

  PromptBundle bundle;
  bundle.messages.push_back({"user", std::move(body)});
  bundle.tools = tools;
  return bundle;
}

PromptBundle assemble_fix_prompt(grammar::Language language, const FixContext& ctx,
                                 const nlohmann::json& tools) {
  std::string body;

  std::string task = "Fix the fuzz driver below.";
  if (!ctx.summary.empty()) task += " " + ctx.summary;
  task += "\n";
  task += ctx.instruction.empty()
              ? "Modify the driver so it builds and exercises the target function, keeping the "
                "same entry point. Reply with the complete corrected driver in a single fenced "
                "code block."
              : ctx.instruction;
  add_section(body, "Task Description", task);

  add_section(body, "Driver Code",
              fence(ctx.harness_text, language == grammar::Language::CPP ? "cpp" : "c"));

  std::string errors;
  if (!ctx.error_lines.empty()) {
    errors += "Compiling error message:\n";
    std::string joined;
    for (const auto& line : ctx.error_lines) joined += line + "\n";
    errors += fence(joined);
  }
  if (!ctx.crash_kind.empty() || !ctx.crash_frames.empty()) {
    errors += "Fuzzing error message (crash stacks):\n";
    std::string stack;
    if (!ctx.crash_kind.empty()) stack += "ERROR: " + ctx.crash_kind + "\n";
    size_t limit = std::min<size_t>(ctx.crash_frames.size(), 10);
    for (size_t i = 0; i < limit; ++i) {
      const auto& f = ctx.crash_frames[i];
      stack += "#" + std::to_string(f.index) + " ";
      stack += f.function.empty() ? "??" : f.function;
      if (!f.location.empty()) stack += " " + f.location;
      stack += "\n";
    }
    errors += fence(stack);
  }
  add_section(body, "Error Messages", errors);

  std::string info;
  for (const auto& snippet : ctx.source_snippets) info += fence(snippet);
  info += join_drivers(ctx.driver_examples);
  add_section(body, "Source Code Information", info);

  PromptBundle bundle;
  bundle.messages.push_back({"user", std::move(body)});
  bundle.tools = tools;
  return bundle;
}

std::vector<std::string> minimize_errors(const std::string& log_text, size_t cap_lines) {
  static const triage::PatternTable table = triage::PatternTable::load_default();
  auto diags = triage::parse_build_log(table, log_text);
  std::set<std::string> error_lines;
  for (const auto& d : diags)
    if (d.severity == triage::Diagnostic::Severity::Error) error_lines.insert(d.raw_line);

  struct Entry {
    std::string line;
    std::string context;
    size_t count = 0;
  };
  std::vector<Entry> entries;
  std::map<std::string, size_t> index;

  auto lines = util::split_lines(log_text);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string line(lines[i]);
    if (!error_lines.count(line)) continue;
    auto it = index.find(line);
    if (it != index.end()) {
      entries[it->second].count++;
      continue;
    }
    Entry e;
    e.line = line;
    e.count = 1;
    if (i + 1 < lines.size()) {
      std::string next(lines[i + 1]);
      if (!error_lines.count(next) && !util::trim(next).empty()) e.context = next;
    }
    index.emplace(std::move(line), entries.size());
    entries.push_back(std::move(e));
  }

  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (out.size() >= cap_lines) break;
    out.push_back(e.line);
    if (!e.context.empty() && out.size() < cap_lines) out.push_back(e.context);
    if (e.count > 1 && out.size() < cap_lines)
      out.push_back("(previous error repeated " + std::to_string(e.count) + " times)");
  }
  return out;
}

std::string extract_harness(const std::string& reply_text) {
  struct Block {
    std::string tag;
    std::string text;
  };
  std::vector<Block> blocks;
  std::optional<Block> open;
  for (auto line_view : util::split_lines(reply_text)) {
    std::string_view trimmed = util::trim(line_view);
    if (trimmed.rfind("```", 0) == 0) {
      if (!open.has_value()) {
        Block b;
        b.tag = std::string(util::trim(trimmed.substr(3)));
        for (auto& c : b.tag) c = static_cast<char>(tolower(static_cast<unsigned char>(c)));
        open = std::move(b);
      } else {
        blocks.push_back(std::move(*open));
        open.reset();
      }
      continue;
    }
    if (open.has_value()) {
      open->text += line_view;
      open->text += '\n';
    }
  }

  auto is_c_family = [](const std::string& tag) {
    return tag == "c" || tag == "cpp" || tag == "c++" || tag == "cc" || tag == "cxx";
  };
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it)
    if (is_c_family(it->tag) && !it->text.empty()) return it->text;

  const Block* best = nullptr;
  for (const auto& b : blocks)
    if (b.tag.empty() && (!best || b.text.size() > best->text.size())) best = &b;
  if (!best)
    for (const auto& b : blocks)
      if (!best || b.text.size() > best->text.size()) best = &b;
  if (!best || best->text.empty()) throw NoCodeBlock("reply contains no usable code block");
  return best->text;
}

}  // namespace ha::agent
