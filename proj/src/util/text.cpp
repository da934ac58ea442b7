#include "util/text.hpp"

#include <sstream>

namespace ha::util {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) out.push_back(text.substr(start));
      break;
    }
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = nl + 1;
  }
  return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); i++) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                        s.front() == '\n'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  if (from.empty()) return text;
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::vector<uint32_t> find_identifier_columns(std::string_view line, std::string_view ident) {
  std::vector<uint32_t> cols;
  if (ident.empty()) return cols;
  size_t pos = 0;
  while ((pos = line.find(ident, pos)) != std::string_view::npos) {
    bool left_ok = pos == 0 || !is_ident_char(line[pos - 1]);
    size_t end = pos + ident.size();
    bool right_ok = end >= line.size() || !is_ident_char(line[end]);
    if (left_ok && right_ok) cols.push_back(static_cast<uint32_t>(pos + 1));
    pos += 1;
  }
  return cols;
}

std::string slice_lines(std::string_view text, uint32_t first, uint32_t last) {
  auto lines = split_lines(text);
  std::string out;
  for (uint32_t n = first; n <= last && n >= 1 && n <= lines.size(); n++) {
    if (n != first) out += '\n';
    out += lines[n - 1];
  }
  return out;
}

uint32_t count_lines(std::string_view text) {
  return static_cast<uint32_t>(split_lines(text).size());
}

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace ha::util
