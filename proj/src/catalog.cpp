#include "traceqa/catalog.hpp"

#include <algorithm>
#include <set>

#include "traceqa/errors.hpp"
#include "traceqa/util.hpp"

namespace traceqa {

using nlohmann::json;

const char* task_template_name(TaskTemplate t) {
  switch (t) {
    case TaskTemplate::fetch_and_place: return "fetch_and_place";
    case TaskTemplate::heat_then_place: return "heat_then_place";
    case TaskTemplate::cool_then_place: return "cool_then_place";
    case TaskTemplate::clean_then_place: return "clean_then_place";
    case TaskTemplate::slice_object: return "slice_object";
    case TaskTemplate::examine_under_light: return "examine_under_light";
  }
  return "fetch_and_place";
}

TaskTemplate task_template_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(TaskTemplate::examine_under_light); ++i) {
    auto t = static_cast<TaskTemplate>(i);
    if (name == task_template_name(t)) return t;
  }
  throw DataError("unknown task template: '" + name + "'");
}

const CatalogObject* WorldCatalog::find_object(const std::string& symbol) const {
  for (const auto& o : objects) {
    if (o.symbol == symbol) return &o;
  }
  return nullptr;
}

const LayoutSpec* WorldCatalog::find_layout(const std::string& layout_id) const {
  for (const auto& l : layouts) {
    if (l.layout_id == layout_id) return &l;
  }
  return nullptr;
}

WorldCatalog default_catalog() {
  WorldCatalog c;
  auto obj = [&](const char* sym, double w) { c.objects.push_back({sym, w, false, "", false}); };
  auto rec = [&](const char* sym, double w, const char* prep) {
    c.objects.push_back({sym, w, true, prep, false});
  };
  auto fix = [&](const char* sym, double w) { c.objects.push_back({sym, w, false, "", true}); };

  obj("alarmclock", 0.8);
  obj("apple", 4.5);
  obj("book", 4.0);
  obj("bowl", 2.5);
  obj("bread", 2.5);
  obj("candle", 1.2);
  obj("cellphone", 1.6);
  obj("creditcard", 0.6);
  obj("cup", 3.0);
  obj("egg", 2.0);
  obj("fork", 2.0);
  obj("kettle", 1.0);
  obj("keychain", 0.7);
  obj("knife", 3.0);
  obj("laptop", 1.6);
  obj("lettuce", 1.5);
  obj("mug", 5.0);
  obj("newspaper", 1.4);
  obj("pan", 1.0);
  obj("pen", 3.0);
  obj("pencil", 1.2);
  obj("pillow", 1.4);
  obj("plate", 3.5);
  obj("pot", 1.0);
  obj("potato", 1.8);
  obj("remotecontrol", 1.3);
  obj("soapbar", 0.5);
  obj("spoon", 2.0);
  obj("spraybottle", 0.5);
  obj("statue", 0.9);
  obj("tissuebox", 0.6);
  obj("tomato", 2.0);
  obj("vase", 1.1);
  obj("watch", 0.8);

  rec("armchair", 1.0, "on");
  rec("bed", 1.5, "on");
  rec("box", 0.8, "in");
  rec("cabinet", 1.6, "in");
  rec("coffeemachine", 1.4, "in");
  rec("coffeetable", 2.2, "on");
  rec("countertop", 2.2, "on");
  rec("desk", 3.0, "on");
  rec("diningtable", 2.5, "on");
  rec("drawer", 1.8, "in");
  rec("dresser", 1.0, "on");
  rec("fridge", 2.0, "in");
  rec("garbagecan", 1.2, "in");
  rec("microwave", 1.8, "in");
  rec("safe", 0.5, "in");
  rec("shelf", 2.0, "on");
  rec("sidetable", 2.8, "on");
  rec("sinkbasin", 1.8, "in");
  rec("sofa", 1.5, "on");

  fix("desklamp", 1.5);
  fix("floorlamp", 1.2);

  c.layouts = {
      {"layout_01",
       {"microwave", "fridge", "sinkbasin", "countertop", "cabinet", "drawer", "diningtable",
        "garbagecan", "coffeemachine", "floorlamp", "knife", "mug", "cup", "plate", "bowl",
        "fork", "spoon", "apple", "bread", "tomato", "potato", "egg", "pan", "pot", "kettle"}},
      {"layout_02",
       {"microwave", "fridge", "sinkbasin", "countertop", "shelf", "drawer", "coffeetable",
        "garbagecan", "box", "desklamp", "knife", "mug", "plate", "bowl", "spoon", "apple",
        "lettuce", "egg", "bread", "newspaper", "spraybottle", "soapbar"}},
      {"layout_03",
       {"microwave", "fridge", "sinkbasin", "sofa", "coffeetable", "shelf", "sidetable",
        "garbagecan", "box", "floorlamp", "desklamp", "knife", "remotecontrol", "newspaper",
        "book", "laptop", "cellphone", "pillow", "vase", "statue", "candle", "mug", "apple"}},
      {"layout_04",
       {"microwave", "fridge", "sinkbasin", "desk", "shelf", "drawer", "sidetable", "safe",
        "cabinet", "desklamp", "knife", "pen", "pencil", "book", "laptop", "creditcard",
        "keychain", "watch", "alarmclock", "tissuebox", "mug", "apple"}},
      {"layout_05",
       {"microwave", "fridge", "sinkbasin", "bed", "dresser", "sidetable", "drawer", "safe",
        "box", "desklamp", "floorlamp", "knife", "pillow", "book", "alarmclock", "cellphone",
        "watch", "keychain", "candle", "tissuebox", "statue", "egg"}},
      {"layout_06",
       {"microwave", "fridge", "sinkbasin", "diningtable", "countertop", "sofa", "desk",
        "garbagecan", "shelf", "floorlamp", "knife", "plate", "cup", "fork", "spoon", "bread",
        "lettuce", "tomato", "vase", "candle", "newspaper", "pen"}},
      {"layout_07",
       {"microwave", "fridge", "sinkbasin", "coffeetable", "armchair", "shelf", "drawer",
        "garbagecan", "coffeemachine", "desklamp", "knife", "mug", "bowl", "apple", "potato",
        "remotecontrol", "book", "creditcard", "spraybottle", "soapbar", "pencil"}},
      {"layout_08",
       {"microwave", "fridge", "sinkbasin", "desk", "bed", "sidetable", "cabinet", "safe",
        "box", "floorlamp", "knife", "pen", "laptop", "cellphone", "watch", "pillow", "kettle",
        "egg", "tomato", "statue", "tissuebox", "alarmclock"}},
  };

  c.task_templates = {TaskTemplate::fetch_and_place,  TaskTemplate::heat_then_place,
                      TaskTemplate::cool_then_place,  TaskTemplate::clean_then_place,
                      TaskTemplate::slice_object,     TaskTemplate::examine_under_light};

  c.paraphrases.verb_synonyms = {
      {"GotoLocation", {"go to", "walk to", "head to", "move over to", "go over to"}},
      {"PickupObject", {"pick up", "grab", "take", "lift"}},
      {"PutObject", {"put", "place", "set"}},
      {"HeatObject", {"heat", "heat up", "warm up"}},
      {"CoolObject", {"cool", "cool down", "chill"}},
      {"CleanObject", {"clean", "wash", "rinse"}},
      {"SliceObject", {"slice", "cut", "slice up"}},
      {"ToggleObject", {"turn on", "switch on", "flip on", "power on"}},
  };
  c.paraphrases.adjectives = {"small", "large", "blue",  "red",   "yellow",
                              "shiny", "old",   "clean", "little", "heavy"};
  c.paraphrases.detail_clauses = {
      "while looking around",    "after a short pause",  "without hesitating",
      "very carefully",          "in one smooth motion", "while humming quietly",
      "right away",              "with both hands",      "after checking the room",
      "slowly and deliberately", "before moving on",     "while glancing at the window",
  };
  return c;
}

json catalog_to_json(const WorldCatalog& c) {
  json objects = json::array();
  for (const auto& o : c.objects) {
    json jo{{"symbol", o.symbol}, {"weight", o.weight}, {"is_receptacle", o.is_receptacle}};
    if (o.is_receptacle) jo["preposition"] = o.preposition;
    if (o.fixed) jo["fixed"] = true;
    objects.push_back(jo);
  }
  json layouts = json::array();
  for (const auto& l : c.layouts) {
    layouts.push_back({{"layout_id", l.layout_id}, {"objects", l.objects}});
  }
  json templates = json::array();
  for (auto t : c.task_templates) templates.push_back(task_template_name(t));
  return json{{"format_version", 1},
              {"objects", objects},
              {"layouts", layouts},
              {"task_templates", templates},
              {"paraphrase_bank",
               {{"verb_synonyms", c.paraphrases.verb_synonyms},
                {"adjectives", c.paraphrases.adjectives},
                {"detail_clauses", c.paraphrases.detail_clauses}}}};
}

WorldCatalog catalog_from_json(const json& j) {
  WorldCatalog c;
  try {
    for (const auto& jo : j.at("objects")) {
      CatalogObject o;
      o.symbol = jo.at("symbol").get<std::string>();
      o.weight = jo.at("weight").get<double>();
      o.is_receptacle = jo.at("is_receptacle").get<bool>();
      if (jo.contains("preposition")) o.preposition = jo.at("preposition").get<std::string>();
      if (jo.contains("fixed")) o.fixed = jo.at("fixed").get<bool>();
      c.objects.push_back(std::move(o));
    }
    for (const auto& jl : j.at("layouts")) {
      c.layouts.push_back({jl.at("layout_id").get<std::string>(),
                           jl.at("objects").get<std::vector<std::string>>()});
    }
    for (const auto& jt : j.at("task_templates")) {
      c.task_templates.push_back(task_template_from_name(jt.get<std::string>()));
    }
    const auto& jp = j.at("paraphrase_bank");
    c.paraphrases.verb_synonyms =
        jp.at("verb_synonyms").get<std::map<std::string, std::vector<std::string>>>();
    c.paraphrases.adjectives = jp.at("adjectives").get<std::vector<std::string>>();
    c.paraphrases.detail_clauses = jp.at("detail_clauses").get<std::vector<std::string>>();
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad catalog document: ") + ex.what());
  }
  return c;
}

WorldCatalog load_catalog(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError("invalid JSON in catalog file: " + path);
  return catalog_from_json(j);
}

void validate_catalog(const WorldCatalog& c, const Lexicon& lex) {
  std::vector<std::string> problems;

  std::set<std::string> symbols;
  std::set<std::string> reachable;
  for (const auto& o : c.objects) {
    if (!symbols.insert(o.symbol).second) problems.push_back("duplicate symbol '" + o.symbol + "'");
    if (o.weight <= 0) problems.push_back("non-positive weight for '" + o.symbol + "'");
    if (o.is_receptacle && o.preposition.empty()) {
      problems.push_back("receptacle '" + o.symbol + "' has no preposition");
    }
    if (!lex.objects.count(o.symbol)) {
      problems.push_back("symbol '" + o.symbol + "' not covered by the lexicon");
    }
  }

  if (c.layouts.empty()) problems.push_back("catalog has no layouts");
  if (c.task_templates.empty()) problems.push_back("catalog has no task templates");

  std::set<std::string> layout_ids;
  for (const auto& l : c.layouts) {
    if (!layout_ids.insert(l.layout_id).second) {
      problems.push_back("duplicate layout id '" + l.layout_id + "'");
    }
    int receptacles = 0, portables = 0, fixtures = 0, non_knife_portables = 0;
    bool microwave = false, fridge = false, sink = false, knife = false;
    for (const auto& sym : l.objects) {
      const CatalogObject* o = c.find_object(sym);
      if (!o) {
        problems.push_back("layout '" + l.layout_id + "' references unknown symbol '" + sym + "'");
        continue;
      }
      reachable.insert(sym);
      if (o->is_receptacle) ++receptacles;
      if (o->fixed) ++fixtures;
      if (o->portable()) {
        ++portables;
        if (sym != kKnifeSymbol) ++non_knife_portables;
      }
      if (sym == kMicrowaveSymbol) microwave = true;
      if (sym == kFridgeSymbol) fridge = true;
      if (sym == kSinkSymbol) sink = true;
      if (sym == kKnifeSymbol) knife = true;
    }
    // Enough structure for every template: the three appliances plus at
    // least two other receptacles (distinct pickup source and destination),
    // the knife, scenery to examine under, and something to carry.
    std::vector<std::string> missing;
    if (!microwave) missing.push_back(kMicrowaveSymbol);
    if (!fridge) missing.push_back(kFridgeSymbol);
    if (!sink) missing.push_back(kSinkSymbol);
    if (!knife) missing.push_back(kKnifeSymbol);
    if (receptacles < 5) missing.push_back(">=5 receptacles");
    if (fixtures < 1) missing.push_back("a fixed object");
    if (non_knife_portables < 1) missing.push_back("a portable object besides the knife");
    if (portables < 5) missing.push_back(">=5 portable objects");
    if (!missing.empty()) {
      problems.push_back("layout '" + l.layout_id +
                         "' cannot host every task template; needs: " + join(missing, ", "));
    }
  }

  for (const auto& o : c.objects) {
    if (!reachable.count(o.symbol)) {
      problems.push_back("object '" + o.symbol + "' appears in no layout");
    }
  }

  if (!problems.empty()) throw DataError("invalid catalog: " + join(problems, "; "));
}

}  // namespace traceqa
