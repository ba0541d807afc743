#include "traceqa/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "traceqa/errors.hpp"
#include "traceqa/rng.hpp"
#include "traceqa/util.hpp"
#include "traceqa/version.hpp"

namespace traceqa {

using nlohmann::json;

namespace {

// Salts for deriving independent sub-streams from one episode seed.
constexpr std::uint64_t kLayoutSalt = 0x1A70;
constexpr std::uint64_t kSampleSalt = 0x5A3D;

struct LayoutView {
  std::vector<const CatalogObject*> portables;    // excludes knife
  const CatalogObject* knife = nullptr;
  std::vector<const CatalogObject*> receptacles;  // everything that can hold
  std::vector<const CatalogObject*> fixtures;
  std::vector<const CatalogObject*> all;
};

LayoutView view_layout(const WorldCatalog& catalog, const LayoutSpec& layout) {
  LayoutView v;
  for (const auto& sym : layout.objects) {
    const CatalogObject* o = catalog.find_object(sym);
    if (!o) throw DataError("layout '" + layout.layout_id + "' references unknown '" + sym + "'");
    v.all.push_back(o);
    if (o->symbol == kKnifeSymbol) {
      v.knife = o;
      continue;
    }
    if (o->is_receptacle) v.receptacles.push_back(o);
    else if (o->fixed) v.fixtures.push_back(o);
    else v.portables.push_back(o);
  }
  return v;
}

const CatalogObject* pick(Rng& rng, const std::vector<const CatalogObject*>& from) {
  if (from.empty()) throw DataError("layout is missing a required role");
  return from[rng.below(from.size())];
}

const CatalogObject* pick_excluding(Rng& rng, const std::vector<const CatalogObject*>& from,
                                    const std::vector<const CatalogObject*>& excluded) {
  std::vector<const CatalogObject*> pool;
  for (const auto* o : from) {
    if (std::find(excluded.begin(), excluded.end(), o) == excluded.end()) pool.push_back(o);
  }
  return pick(rng, pool);
}

// Builds the plan for one task instance. Every (verb, args) pair is distinct
// by construction except the optional revisit step, which deliberately
// repeats an earlier GotoLocation so repeated actions occur in real corpora.
std::vector<PlanStep> build_plan(TaskTemplate task, Rng& rng, const LayoutView& lv) {
  std::vector<PlanStep> plan;
  auto goto_ = [&](const CatalogObject* o) {
    plan.push_back({Verb::GotoLocation, {o->symbol}});
  };

  switch (task) {
    case TaskTemplate::fetch_and_place: {
      const auto* target = pick(rng, lv.portables);
      const auto* src = pick(rng, lv.receptacles);
      const auto* dst = pick_excluding(rng, lv.receptacles, {src});
      goto_(src);
      plan.push_back({Verb::PickupObject, {target->symbol, src->symbol}});
      goto_(dst);
      plan.push_back({Verb::PutObject, {target->symbol, dst->symbol}});
      if (rng.uniform() < 0.12) goto_(src);  // revisit: a repeated action
      break;
    }
    case TaskTemplate::heat_then_place:
    case TaskTemplate::cool_then_place:
    case TaskTemplate::clean_then_place: {
      const char* appliance_sym = task == TaskTemplate::heat_then_place ? kMicrowaveSymbol
                                  : task == TaskTemplate::cool_then_place ? kFridgeSymbol
                                                                          : kSinkSymbol;
      Verb verb = task == TaskTemplate::heat_then_place ? Verb::HeatObject
                  : task == TaskTemplate::cool_then_place ? Verb::CoolObject
                                                          : Verb::CleanObject;
      const CatalogObject* appliance = nullptr;
      for (const auto* o : lv.receptacles) {
        if (o->symbol == appliance_sym) appliance = o;
      }
      if (!appliance) throw DataError(std::string("layout lacks ") + appliance_sym);
      const auto* target = pick(rng, lv.portables);
      const auto* src = pick_excluding(rng, lv.receptacles, {appliance});
      const auto* dst = pick_excluding(rng, lv.receptacles, {appliance, src});
      goto_(src);
      plan.push_back({Verb::PickupObject, {target->symbol, src->symbol}});
      goto_(appliance);
      plan.push_back({verb, {target->symbol, appliance->symbol}});
      goto_(dst);
      plan.push_back({Verb::PutObject, {target->symbol, dst->symbol}});
      break;
    }
    case TaskTemplate::slice_object: {
      if (!lv.knife) throw DataError("layout lacks the knife");
      const auto* target = pick(rng, lv.portables);
      const auto* knife_src = pick(rng, lv.receptacles);
      const auto* target_loc = pick_excluding(rng, lv.receptacles, {knife_src});
      goto_(knife_src);
      plan.push_back({Verb::PickupObject, {lv.knife->symbol, knife_src->symbol}});
      goto_(target_loc);
      plan.push_back({Verb::SliceObject, {target->symbol, lv.knife->symbol}});
      if (rng.uniform() < 0.5) {
        plan.push_back({Verb::PutObject, {lv.knife->symbol, target_loc->symbol}});
      }
      break;
    }
    case TaskTemplate::examine_under_light: {
      const auto* target = pick(rng, lv.portables);
      const auto* src = pick(rng, lv.receptacles);
      const auto* lamp = pick(rng, lv.fixtures);
      goto_(src);
      plan.push_back({Verb::PickupObject, {target->symbol, src->symbol}});
      goto_(lamp);
      plan.push_back({Verb::ToggleObject, {lamp->symbol}});
      break;
    }
  }
  return plan;
}

std::string describe_step(const PlanStep& step, Rng& rng, const ParaphraseBank& bank,
                          const Lexicon& lex) {
  const auto it = bank.verb_synonyms.find(verb_name(step.verb));
  std::string vp = it != bank.verb_synonyms.end() && !it->second.empty()
                       ? it->second[rng.below(it->second.size())]
                       : lex.verb_phrase(step.verb);

  std::string first = lex.object_phrase(step.args.at(0));
  if (!bank.adjectives.empty() && rng.uniform() < 0.35) {
    first = bank.adjectives[rng.below(bank.adjectives.size())] + " " + first;
  }

  std::string out;
  switch (step.verb) {
    case Verb::GotoLocation:
    case Verb::ToggleObject:
      out = vp + " the " + first;
      break;
    case Verb::PickupObject: {
      out = vp + " the " + first;
      if (rng.uniform() < 0.45) {
        const char* link = rng.coin() ? "from the " : "off the ";
        out += " " + std::string(link) + lex.object_phrase(step.args.at(1));
      }
      break;
    }
    case Verb::PutObject:
      out = vp + " the " + first + " " + lex.preposition_for(step.args.at(1)) + " the " +
            lex.object_phrase(step.args.at(1));
      break;
    case Verb::HeatObject:
    case Verb::CoolObject:
    case Verb::CleanObject:
      out = vp + " the " + first + " in the " + lex.object_phrase(step.args.at(1));
      break;
    case Verb::SliceObject:
      out = vp + " the " + first + " with the " + lex.object_phrase(step.args.at(1));
      break;
  }
  if (!bank.detail_clauses.empty() && rng.uniform() < 0.3) {
    out += " " + bank.detail_clauses[rng.below(bank.detail_clauses.size())];
  }
  return out;
}

std::string summarize_task(TaskTemplate task, const std::vector<PlanStep>& plan, Rng& rng,
                           const Lexicon& lex) {
  auto a = [&](const std::string& sym) {
    return with_indefinite_article(lex.object_phrase(sym));
  };
  auto the = [&](const std::string& sym) { return "the " + lex.object_phrase(sym); };
  int variant = static_cast<int>(rng.below(3));

  switch (task) {
    case TaskTemplate::fetch_and_place: {
      // plan: goto src, pickup, goto dst, put (maybe revisit)
      const auto& target = plan.at(3).args.at(0);
      const auto& dst = plan.at(3).args.at(1);
      std::string prep = lex.preposition_for(dst);
      if (variant == 0) return "put " + a(target) + " " + prep + " " + the(dst);
      if (variant == 1) return "move " + a(target) + " to " + the(dst);
      return "take " + a(target) + " over to " + the(dst);
    }
    case TaskTemplate::heat_then_place:
    case TaskTemplate::cool_then_place:
    case TaskTemplate::clean_then_place: {
      const auto& target = plan.at(5).args.at(0);
      const auto& dst = plan.at(5).args.at(1);
      std::string prep = lex.preposition_for(dst);
      const char* adj = task == TaskTemplate::heat_then_place ? "heated"
                        : task == TaskTemplate::cool_then_place ? "chilled"
                                                                : "clean";
      const char* verb = task == TaskTemplate::heat_then_place ? "heat"
                         : task == TaskTemplate::cool_then_place ? "cool"
                                                                 : "wash";
      if (variant == 0) {
        return "put " + with_indefinite_article(std::string(adj) + " " + lex.object_phrase(target)) +
               " " + prep + " " + the(dst);
      }
      if (variant == 1) {
        return std::string(verb) + " " + a(target) + " and put it " + prep + " " + the(dst);
      }
      return std::string(verb) + " " + a(target) + " and leave it " + prep + " " + the(dst);
    }
    case TaskTemplate::slice_object: {
      const auto& target = plan.at(3).args.at(0);
      if (variant == 0) return "slice up " + a(target) + " with the knife";
      if (variant == 1) return "cut " + a(target) + " into pieces";
      return "cut up " + a(target) + " with the knife";
    }
    case TaskTemplate::examine_under_light: {
      const auto& target = plan.at(1).args.at(0);
      const auto& lamp = plan.at(3).args.at(0);
      if (variant == 0) return "look at " + a(target) + " under " + the(lamp);
      if (variant == 1) return "examine " + a(target) + " under " + the(lamp);
      return "check out " + a(target) + " by " + the(lamp);
    }
  }
  return "";
}

}  // namespace

void validate_sim_config(const SimConfig& cfg) {
  if (cfg.n_train < 0 || cfg.n_valid_seen < 0 || cfg.n_valid_unseen < 0) {
    throw UsageError("episode counts must be >= 0");
  }
  if (cfg.distractor_visibility_rate < 0.0 || cfg.distractor_visibility_rate > 1.0) {
    throw UsageError("distractor visibility rate must be in [0, 1]");
  }
  if (cfg.unseen_layout_fraction <= 0.0 || cfg.unseen_layout_fraction >= 1.0) {
    throw UsageError("unseen layout fraction must be in (0, 1)");
  }
  if (cfg.workers < 1) throw UsageError("workers must be >= 1");
}

std::vector<std::string> reserved_layouts(const WorldCatalog& catalog, double unseen_fraction) {
  std::size_t n = catalog.layouts.size();
  auto k = static_cast<std::size_t>(std::ceil(unseen_fraction * static_cast<double>(n)));
  if (k < 1) k = 1;
  if (k >= n) k = n - 1;  // never starve the seen side
  std::vector<std::string> out;
  for (std::size_t i = n - k; i < n; ++i) out.push_back(catalog.layouts[i].layout_id);
  return out;
}

EpisodeTrace sample_episode(const WorldCatalog& catalog, const std::string& layout_id,
                            std::uint64_t seed, double distractor_rate, const Lexicon& lex) {
  const LayoutSpec* layout = catalog.find_layout(layout_id);
  if (!layout) throw DataError("unknown layout: '" + layout_id + "'");
  if (catalog.task_templates.empty()) throw DataError("catalog has no task templates");
  LayoutView lv = view_layout(catalog, *layout);

  Rng rng(seed);
  TaskTemplate task = catalog.task_templates[rng.below(catalog.task_templates.size())];

  EpisodeTrace e;
  e.layout_id = layout_id;
  e.plan = build_plan(task, rng, lv);
  std::size_t n = e.plan.size();
  e.visible_objects.assign(n, {});

  // Step arguments are visible at their own step; a carried object stays
  // visible until it is put down.
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& a : e.plan[i].args) e.visible_objects[i].insert(a);
  }
  std::string carried;
  for (std::size_t i = 0; i < n; ++i) {
    if (!carried.empty()) e.visible_objects[i].insert(carried);
    const auto& s = e.plan[i];
    if (s.verb == Verb::PickupObject) carried = s.args[0];
    if (s.verb == Verb::PutObject && s.args[0] == carried) carried.clear();
  }

  // Weighted distractors: each non-plan layout object shows up in one
  // contiguous window of steps with probability rate * weight / max weight,
  // making episode-level visibility counts proportional to weight.
  std::set<std::string> plan_args;
  for (const auto& s : e.plan) plan_args.insert(s.args.begin(), s.args.end());
  std::vector<const CatalogObject*> distractor_pool;
  double max_w = 0.0;
  for (const auto* o : lv.all) {
    if (plan_args.count(o->symbol)) continue;
    distractor_pool.push_back(o);
    max_w = std::max(max_w, o->weight);
  }
  if (max_w > 0.0 && distractor_rate > 0.0) {
    for (const auto* o : distractor_pool) {
      double p = distractor_rate * o->weight / max_w;
      bool present = rng.uniform() < p;
      std::size_t start = rng.below(n);                  // drawn unconditionally to keep
      std::size_t len = 1 + rng.below(n - start);        // the stream layout stable
      if (!present) continue;
      for (std::size_t i = start; i < start + len; ++i) e.visible_objects[i].insert(o->symbol);
    }
  }

  for (const auto& s : e.plan) {
    if (s.verb == Verb::GotoLocation) continue;
    e.interacted_objects.insert(s.args.begin(), s.args.end());
  }

  e.step_descriptions.reserve(n);
  for (const auto& s : e.plan) {
    e.step_descriptions.push_back(describe_step(s, rng, catalog.paraphrases, lex));
  }
  e.short_summary = summarize_task(task, e.plan, rng, lex);
  return e;
}

CorpusBundle generate_corpus(const WorldCatalog& catalog, const SimConfig& cfg, const Lexicon& lex) {
  validate_sim_config(cfg);
  validate_catalog(catalog, lex);

  std::vector<std::string> reserved;
  std::vector<std::string> seen;
  if (cfg.n_valid_unseen > 0) {
    reserved = reserved_layouts(catalog, cfg.unseen_layout_fraction);
  }
  for (const auto& l : catalog.layouts) {
    if (std::find(reserved.begin(), reserved.end(), l.layout_id) == reserved.end()) {
      seen.push_back(l.layout_id);
    }
  }
  if (seen.empty()) throw DataError("no layouts left for train after reserving unseen ones");

  struct Slot {
    Split split;
    const char* prefix;
    int count;
  };
  const Slot slots[] = {{Split::train, "train", cfg.n_train},
                        {Split::valid_seen, "vseen", cfg.n_valid_seen},
                        {Split::valid_unseen, "vunseen", cfg.n_valid_unseen}};

  struct Job {
    Split split;
    std::string episode_id;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  std::size_t global_index = 0;
  for (const auto& slot : slots) {
    for (int k = 0; k < slot.count; ++k, ++global_index) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%06d", slot.prefix, k);
      jobs.push_back({slot.split, id, seed_combine(cfg.seed, global_index)});
    }
  }

  CorpusBundle bundle;
  bundle.episodes.resize(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto& pool = job.split == Split::valid_unseen ? reserved : seen;
    Rng layout_rng(seed_combine(job.seed, kLayoutSalt));
    const std::string& layout_id = pool[layout_rng.below(pool.size())];
    EpisodeTrace e = sample_episode(catalog, layout_id, seed_combine(job.seed, kSampleSalt),
                                    cfg.distractor_visibility_rate, lex);
    e.episode_id = job.episode_id;
    e.split = job.split;
    e.frame_refs.reserve(e.plan.size());
    for (std::size_t step = 0; step < e.plan.size(); ++step) {
      char ref[96];
      std::snprintf(ref, sizeof ref, "frames/%s/step%03zu.png", e.episode_id.c_str(), step);
      e.frame_refs.push_back(ref);
    }
    bundle.episodes[i] = std::move(e);
  });

  bundle.stats = compute_stats(bundle.episodes, lex);
  bundle.manifest = json{{"format_version", kFormatVersion},
                         {"tool_version", kToolVersion},
                         {"kind", "episode_corpus"},
                         {"seed", cfg.seed},
                         {"counts",
                          {{"train", cfg.n_train},
                           {"valid_seen", cfg.n_valid_seen},
                           {"valid_unseen", cfg.n_valid_unseen}}},
                         {"distractor_visibility_rate", cfg.distractor_visibility_rate},
                         {"unseen_layout_fraction", cfg.unseen_layout_fraction},
                         {"reserved_layouts", reserved}};
  return bundle;
}

std::vector<EpisodeTrace> ingest_external(const std::string& path, const json& schema_map,
                                          std::vector<std::string>& diagnostics) {
  static const char* kRequired[] = {"episode_id",     "layout_id",          "split",
                                    "plan",           "step_descriptions",  "visible_objects",
                                    "interacted_objects", "short_summary"};

  std::map<std::string, std::string> field_map;  // our name -> their name
  for (const char* f : kRequired) field_map[f] = f;
  field_map["frame_refs"] = "frame_refs";
  if (schema_map.contains("fields")) {
    if (!schema_map.at("fields").is_object()) {
      throw DataError("schema map 'fields' must be an object");
    }
    for (const auto& [ours, theirs] : schema_map.at("fields").items()) {
      if (!field_map.count(ours)) throw DataError("schema map names unknown field '" + ours + "'");
      field_map[ours] = theirs.get<std::string>();
    }
  }

  std::vector<EpisodeTrace> out;
  for (const auto& [line_no, line] : read_jsonl_lines(path)) {
    json src = json::parse(line, nullptr, false);
    if (src.is_discarded()) {
      diagnostics.push_back("line " + std::to_string(line_no) + ": invalid JSON, skipped");
      continue;
    }
    json native = json::object();
    bool missing = false;
    for (const char* f : kRequired) {
      const std::string& theirs = field_map[f];
      if (!src.contains(theirs)) {
        diagnostics.push_back("line " + std::to_string(line_no) + ": missing field '" + theirs +
                              "' (for '" + std::string(f) + "'), skipped");
        missing = true;
        break;
      }
      native[f] = src.at(theirs);
    }
    if (missing) continue;
    if (src.contains(field_map["frame_refs"])) {
      native["frame_refs"] = src.at(field_map["frame_refs"]);
    }

    EpisodeTrace e;
    try {
      e = episode_from_json(native);
    } catch (const DataError& ex) {
      diagnostics.push_back("line " + std::to_string(line_no) + ": " + ex.what() + ", skipped");
      continue;
    }
    auto check = validate_episode(e);
    if (!check.ok()) {
      std::vector<std::string> msgs;
      for (const auto& v : check.violations) msgs.push_back(v.field + ": " + v.message);
      diagnostics.push_back("line " + std::to_string(line_no) + ": invalid episode (" +
                            join(msgs, "; ") + "), skipped");
      continue;
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace traceqa
