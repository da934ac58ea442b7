#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ha::util {

inline bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

/// Splits on '\n'; a trailing newline does not produce an empty final line.
std::vector<std::string_view> split_lines(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string_view trim(std::string_view s);

std::string replace_all(std::string text, std::string_view from, std::string_view to);

/// Column (1-based) of every word-boundary occurrence of `ident` in `line`.
std::vector<uint32_t> find_identifier_columns(std::string_view line, std::string_view ident);

/// Lines [first, last] of `text`, 1-based inclusive, newline-joined.
std::string slice_lines(std::string_view text, uint32_t first, uint32_t last);

uint32_t count_lines(std::string_view text);

/// FNV-1a 64-bit.
uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace ha::util
