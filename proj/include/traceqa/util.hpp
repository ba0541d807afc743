#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace traceqa {

std::string to_lower_ascii(std::string_view s);
std::string trim(std::string_view s);

// Whitespace-separated tokens (space, tab, CR, LF).
std::vector<std::string> split_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// True when `needle` occurs in `haystack` as a contiguous run of whole
// tokens. Multi-word noun phrases are matched this way everywhere (summary
// mentions, hold-out scans, contamination checks).
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

// "a pen" / "an apple": article chosen by the first letter of the phrase.
std::string with_indefinite_article(const std::string& noun_phrase);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Non-empty lines of a file, with their 1-based line numbers.
std::vector<std::pair<int, std::string>> read_jsonl_lines(const std::string& path);

// Runs fn(i) for i in [0, n) across `workers` threads in fixed index chunks.
// Callers write results into pre-sized slots, so output never depends on the
// worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace traceqa
