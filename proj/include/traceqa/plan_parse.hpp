#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "traceqa/episode.hpp"

namespace traceqa {

// Plan source: one step per line, "(<Verb> <arg> [<arg>])". Verbs are
// case-sensitive; args are bare symbol tokens. Blank lines are skipped.
// Malformed input raises ParseError with 1-based line and column.
std::vector<PlanStep> parse_plan(std::string_view text);

std::string serialize_plan(const std::vector<PlanStep>& plan);

}  // namespace traceqa
