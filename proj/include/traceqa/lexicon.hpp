#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "traceqa/episode.hpp"

namespace traceqa {

// Symbol-to-English mapping used by every rendering path. object_names must
// be injective: two symbols sharing a noun phrase would make either/or and
// temporal answers ambiguous.
struct Lexicon {
  std::map<std::string, std::string> verbs;         // verb name -> phrase ("go to")
  std::map<std::string, std::string> objects;       // symbol -> noun phrase
  std::map<std::string, std::string> prepositions;  // receptacle symbol -> "on"/"in"

  const std::string& verb_phrase(Verb v) const;               // throws DataError
  const std::string& object_phrase(const std::string& sym) const;  // throws DataError
  // Unlexicalized symbols fall back to the raw symbol token; used for
  // corpus statistics over externally ingested traces.
  std::string object_phrase_lenient(const std::string& sym) const;
  std::string preposition_for(const std::string& sym) const;  // default "on"
  std::optional<std::string> symbol_for_phrase(const std::string& phrase) const;
};

Lexicon default_lexicon();
Lexicon lexicon_from_json(const nlohmann::json& j);  // validates, throws DataError
nlohmann::json lexicon_to_json(const Lexicon& lex);
Lexicon load_lexicon(const std::string& path);

// One imperative clause per verb:
//   go to the desk / pick up the pen / put the pen on the desk /
//   heat the apple in the microwave / slice the bread with the knife /
//   turn on the desk lamp
// PickupObject renders only its first argument.
std::string render_step(const PlanStep& step, const Lexicon& lex);
std::string render_step_lenient(const PlanStep& step, const Lexicon& lex);

// Steps joined with ", " and closed with ".".
std::string render_long_summary(const std::vector<PlanStep>& plan, const Lexicon& lex);

// Canonical comparison form: ASCII lowercase, whitespace collapsed to single
// spaces, trimmed, trailing '.'/'?' stripped. Idempotent.
std::string normalize_answer(std::string_view text);

}  // namespace traceqa
