#include "traceqa/plan_parse.hpp"

#include <sstream>

#include "traceqa/errors.hpp"
#include "traceqa/util.hpp"

namespace traceqa {

namespace {

bool symbol_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '-';
}

}  // namespace

std::vector<PlanStep> parse_plan(std::string_view text) {
  std::vector<PlanStep> plan;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

    std::size_t i = 0;
    auto col = [&] { return static_cast<int>(i) + 1; };
    auto skip_spaces = [&] {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    };

    skip_spaces();
    if (i == line.size()) continue;  // blank line

    if (line[i] != '(') throw ParseError("expected '('", line_no, col());
    ++i;
    skip_spaces();

    std::size_t start = i;
    while (i < line.size() && symbol_char(line[i])) ++i;
    if (i == start) throw ParseError("expected verb", line_no, col());
    std::string vname(line.substr(start, i - start));
    auto verb = verb_from_name(vname);
    if (!verb) throw ParseError("unknown verb '" + vname + "'", line_no, static_cast<int>(start) + 1);

    PlanStep step;
    step.verb = *verb;
    for (;;) {
      skip_spaces();
      if (i < line.size() && line[i] == ')') {
        ++i;
        break;
      }
      start = i;
      while (i < line.size() && symbol_char(line[i])) ++i;
      if (i == start) {
        throw ParseError(i < line.size() ? "unexpected character" : "missing ')'", line_no, col());
      }
      step.args.emplace_back(line.substr(start, i - start));
    }
    skip_spaces();
    if (i != line.size()) throw ParseError("trailing characters after ')'", line_no, col());

    int want = verb_arity(step.verb);
    if (static_cast<int>(step.args.size()) != want) {
      throw ParseError(vname + " takes " + std::to_string(want) + " argument(s), got " +
                           std::to_string(step.args.size()),
                       line_no, 1);
    }
    plan.push_back(std::move(step));
  }
  return plan;
}

std::string serialize_plan(const std::vector<PlanStep>& plan) {
  std::ostringstream ss;
  for (const auto& s : plan) {
    ss << '(' << verb_name(s.verb);
    for (const auto& a : s.args) ss << ' ' << a;
    ss << ")\n";
  }
  return ss.str();
}

}  // namespace traceqa
