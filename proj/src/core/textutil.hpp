#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace supaudit {

// ASCII-only case folding; bytes outside [A-Z] pass through unchanged so
// UTF-8 sequences stay intact.
char ascii_lower(char c);
std::string ascii_lower_copy(std::string_view text);

bool is_ascii_space(char c);

// A "word" byte for boundary purposes: ASCII alphanumeric, or any byte of a
// multi-byte UTF-8 sequence.
bool is_word_byte(char c);

// Number of maximal non-whitespace runs.
int count_words(std::string_view text);

std::string trim_copy(std::string_view text);

// Lowercase, strip punctuation, collapse whitespace runs to single spaces,
// trim. Idempotent.
std::string normalize_title(std::string_view title);

std::string sha256_hex(std::string_view data);

std::vector<std::string> split(std::string_view text, char sep);

// Shortest round-trip decimal form of a double (stable across runs).
std::string format_double(double value);

// Fixed two-decimal form used for display tables.
std::string format_fixed2(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::string iso8601_utc_now();

}  // namespace supaudit
