#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "traceqa/lexicon.hpp"

namespace traceqa {

struct CatalogObject {
  std::string symbol;
  double weight = 1.0;        // relative appearance weight, > 0
  bool is_receptacle = false; // can hold things / serve as a put destination
  std::string preposition;    // "on"/"in", receptacles only
  bool fixed = false;         // scenery that is never picked up (lamps)

  bool portable() const { return !is_receptacle && !fixed; }
};

struct LayoutSpec {
  std::string layout_id;
  std::vector<std::string> objects;  // symbols present in this layout
};

enum class TaskTemplate {
  fetch_and_place,
  heat_then_place,
  cool_then_place,
  clean_then_place,
  slice_object,
  examine_under_light,
};

const char* task_template_name(TaskTemplate t);
TaskTemplate task_template_from_name(const std::string& name);  // throws DataError

// Surface variation for step descriptions: verb synonyms plus optional
// adjectives and trailing detail clauses.
struct ParaphraseBank {
  std::map<std::string, std::vector<std::string>> verb_synonyms;  // verb name -> phrases
  std::vector<std::string> adjectives;
  std::vector<std::string> detail_clauses;
};

struct WorldCatalog {
  std::vector<CatalogObject> objects;
  std::vector<LayoutSpec> layouts;
  std::vector<TaskTemplate> task_templates;
  ParaphraseBank paraphrases;

  const CatalogObject* find_object(const std::string& symbol) const;
  const LayoutSpec* find_layout(const std::string& layout_id) const;
};

WorldCatalog default_catalog();

WorldCatalog catalog_from_json(const nlohmann::json& j);
nlohmann::json catalog_to_json(const WorldCatalog& c);
WorldCatalog load_catalog(const std::string& path);

// Structural checks: unique symbols/layout ids, positive weights, receptacle
// prepositions present, layout symbols known, every object reachable from
// some layout, every task template instantiable in every layout (heat needs
// a microwave, slice needs the knife, examine needs fixed scenery, and so
// on), and every symbol covered by the lexicon. Throws DataError listing
// everything wrong.
void validate_catalog(const WorldCatalog& c, const Lexicon& lex);

// Required-role symbols the templates rely on.
inline constexpr const char* kMicrowaveSymbol = "microwave";
inline constexpr const char* kFridgeSymbol = "fridge";
inline constexpr const char* kSinkSymbol = "sinkbasin";
inline constexpr const char* kKnifeSymbol = "knife";

}  // namespace traceqa
