#include "traceqa/lexicon.hpp"

#include <set>

#include "traceqa/errors.hpp"
#include "traceqa/util.hpp"

namespace traceqa {

using nlohmann::json;

const std::string& Lexicon::verb_phrase(Verb v) const {
  auto it = verbs.find(verb_name(v));
  if (it == verbs.end()) {
    throw DataError(std::string("lexicon has no phrase for verb ") + verb_name(v));
  }
  return it->second;
}

const std::string& Lexicon::object_phrase(const std::string& sym) const {
  auto it = objects.find(sym);
  if (it == objects.end()) throw DataError("unlexicalized object symbol: '" + sym + "'");
  return it->second;
}

std::string Lexicon::object_phrase_lenient(const std::string& sym) const {
  auto it = objects.find(sym);
  return it == objects.end() ? sym : it->second;
}

std::string Lexicon::preposition_for(const std::string& sym) const {
  auto it = prepositions.find(sym);
  return it == prepositions.end() ? "on" : it->second;
}

std::optional<std::string> Lexicon::symbol_for_phrase(const std::string& phrase) const {
  for (const auto& [sym, ph] : objects) {
    if (ph == phrase) return sym;
  }
  return std::nullopt;
}

Lexicon default_lexicon() {
  Lexicon lex;
  lex.verbs = {
      {"GotoLocation", "go to"}, {"PickupObject", "pick up"}, {"PutObject", "put"},
      {"HeatObject", "heat"},    {"CoolObject", "cool"},      {"CleanObject", "clean"},
      {"SliceObject", "slice"},  {"ToggleObject", "turn on"},
  };
  lex.objects = {
      {"alarmclock", "alarm clock"},
      {"apple", "apple"},
      {"armchair", "armchair"},
      {"bed", "bed"},
      {"book", "book"},
      {"bowl", "bowl"},
      {"box", "box"},
      {"bread", "bread"},
      {"cabinet", "cabinet"},
      {"candle", "candle"},
      {"cellphone", "cell phone"},
      {"coffeemachine", "coffee machine"},
      {"coffeetable", "coffee table"},
      {"countertop", "countertop"},
      {"creditcard", "credit card"},
      {"cup", "cup"},
      {"desk", "desk"},
      {"desklamp", "desk lamp"},
      {"diningtable", "dining table"},
      {"drawer", "drawer"},
      {"dresser", "dresser"},
      {"egg", "egg"},
      {"floorlamp", "floor lamp"},
      {"fork", "fork"},
      {"fridge", "fridge"},
      {"garbagecan", "garbage can"},
      {"kettle", "kettle"},
      {"keychain", "keychain"},
      {"knife", "knife"},
      {"laptop", "laptop"},
      {"lettuce", "lettuce"},
      {"microwave", "microwave"},
      {"mug", "mug"},
      {"newspaper", "newspaper"},
      {"pan", "pan"},
      {"pen", "pen"},
      {"pencil", "pencil"},
      {"pillow", "pillow"},
      {"plate", "plate"},
      {"pot", "pot"},
      {"potato", "potato"},
      {"remotecontrol", "remote control"},
      {"safe", "safe"},
      {"shelf", "shelf"},
      {"sidetable", "side table"},
      {"sinkbasin", "sink basin"},
      {"soapbar", "soap bar"},
      {"sofa", "sofa"},
      {"spoon", "spoon"},
      {"spraybottle", "spray bottle"},
      {"statue", "statue"},
      {"tissuebox", "tissue box"},
      {"tomato", "tomato"},
      {"vase", "vase"},
      {"watch", "watch"},
  };
  lex.prepositions = {
      {"armchair", "on"}, {"bed", "on"},          {"box", "in"},         {"cabinet", "in"},
      {"coffeemachine", "in"}, {"coffeetable", "on"}, {"countertop", "on"},  {"desk", "on"},
      {"diningtable", "on"},   {"drawer", "in"},      {"dresser", "on"},     {"fridge", "in"},
      {"garbagecan", "in"},    {"microwave", "in"},   {"safe", "in"},        {"shelf", "on"},
      {"sidetable", "on"},     {"sinkbasin", "in"},   {"sofa", "on"},
  };
  return lex;
}

static void validate_lexicon(const Lexicon& lex) {
  std::vector<std::string> problems;
  for (const auto& info : kVerbTable) {
    if (!lex.verbs.count(info.name)) {
      problems.push_back(std::string("missing verb phrase for ") + info.name);
    }
  }
  for (const auto& [name, phrase] : lex.verbs) {
    if (phrase.empty()) problems.push_back("empty phrase for verb " + name);
  }
  std::map<std::string, std::string> seen_phrase;
  for (const auto& [sym, phrase] : lex.objects) {
    if (phrase.empty()) problems.push_back("empty noun phrase for '" + sym + "'");
    auto [it, fresh] = seen_phrase.emplace(phrase, sym);
    if (!fresh) {
      problems.push_back("noun phrase '" + phrase + "' maps from both '" + it->second +
                         "' and '" + sym + "'");
    }
  }
  if (!problems.empty()) throw DataError("invalid lexicon: " + join(problems, "; "));
}

Lexicon lexicon_from_json(const json& j) {
  Lexicon lex;
  try {
    for (const auto& [k, v] : j.at("verbs").items()) lex.verbs[k] = v.get<std::string>();
    for (const auto& [k, v] : j.at("objects").items()) lex.objects[k] = v.get<std::string>();
    if (j.contains("prepositions")) {
      for (const auto& [k, v] : j.at("prepositions").items()) {
        lex.prepositions[k] = v.get<std::string>();
      }
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad lexicon: ") + ex.what());
  }
  validate_lexicon(lex);
  return lex;
}

json lexicon_to_json(const Lexicon& lex) {
  return json{{"verbs", lex.verbs}, {"objects", lex.objects}, {"prepositions", lex.prepositions}};
}

Lexicon load_lexicon(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError("invalid JSON in lexicon file: " + path);
  return lexicon_from_json(j);
}

static std::string render_with(const PlanStep& step, const Lexicon& lex, bool lenient) {
  auto noun = [&](const std::string& sym) {
    return lenient ? lex.object_phrase_lenient(sym) : lex.object_phrase(sym);
  };
  const std::string& vp = lex.verb_phrase(step.verb);
  switch (step.verb) {
    case Verb::GotoLocation:
    case Verb::ToggleObject:
      return vp + " the " + noun(step.args.at(0));
    case Verb::PickupObject:
      // The source receptacle stays implicit: "pick up the pen".
      return vp + " the " + noun(step.args.at(0));
    case Verb::PutObject:
      return vp + " the " + noun(step.args.at(0)) + " " + lex.preposition_for(step.args.at(1)) +
             " the " + noun(step.args.at(1));
    case Verb::HeatObject:
    case Verb::CoolObject:
    case Verb::CleanObject:
      return vp + " the " + noun(step.args.at(0)) + " in the " + noun(step.args.at(1));
    case Verb::SliceObject:
      return vp + " the " + noun(step.args.at(0)) + " with the " + noun(step.args.at(1));
  }
  throw DataError("unrenderable step");
}

std::string render_step(const PlanStep& step, const Lexicon& lex) {
  return render_with(step, lex, false);
}

std::string render_step_lenient(const PlanStep& step, const Lexicon& lex) {
  return render_with(step, lex, true);
}

std::string render_long_summary(const std::vector<PlanStep>& plan, const Lexicon& lex) {
  std::vector<std::string> parts;
  parts.reserve(plan.size());
  for (const auto& s : plan) parts.push_back(render_step(s, lex));
  return join(parts, ", ") + ".";
}

std::string normalize_answer(std::string_view text) {
  std::string s = join(split_tokens(to_lower_ascii(text)), " ");
  std::size_t e = s.size();
  while (e > 0 && (s[e - 1] == '.' || s[e - 1] == '?' || s[e - 1] == ' ')) --e;
  s.resize(e);
  return s;
}

}  // namespace traceqa
