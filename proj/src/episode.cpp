#include "traceqa/episode.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "traceqa/errors.hpp"
#include "traceqa/util.hpp"

namespace traceqa {

using nlohmann::json;

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid_seen: return "valid_seen";
    case Split::valid_unseen: return "valid_unseen";
  }
  return "train";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid_seen") return Split::valid_seen;
  if (name == "valid_unseen") return Split::valid_unseen;
  throw DataError("unknown split: '" + name + "'");
}

std::set<std::string> EpisodeTrace::visible_union() const {
  std::set<std::string> out;
  for (const auto& step_set : visible_objects) out.insert(step_set.begin(), step_set.end());
  return out;
}

ValidationResult validate_episode(const EpisodeTrace& e) {
  ValidationResult r;
  auto bad = [&](std::string field, std::string msg) {
    r.violations.push_back({std::move(field), std::move(msg)});
  };

  if (e.episode_id.empty()) bad("episode_id", "empty");
  if (e.layout_id.empty()) bad("layout_id", "empty");
  if (e.plan.empty()) bad("plan", "empty plan");

  for (std::size_t i = 0; i < e.plan.size(); ++i) {
    const PlanStep& s = e.plan[i];
    std::string where = "plan[" + std::to_string(i) + "]";
    int want = verb_arity(s.verb);
    if (static_cast<int>(s.args.size()) != want) {
      bad(where, std::string(verb_name(s.verb)) + " takes " + std::to_string(want) +
                     " argument(s), got " + std::to_string(s.args.size()));
    }
    for (const auto& a : s.args) {
      if (a.empty() || a.find_first_of(" \t\r\n") != std::string::npos) {
        bad(where, "argument '" + a + "' is not a bare symbol");
      }
    }
  }

  if (e.step_descriptions.size() != e.plan.size()) {
    bad("step_descriptions", "length " + std::to_string(e.step_descriptions.size()) +
                                 " does not match plan length " + std::to_string(e.plan.size()));
  }
  if (e.visible_objects.size() != e.plan.size()) {
    bad("visible_objects", "length " + std::to_string(e.visible_objects.size()) +
                               " does not match plan length " + std::to_string(e.plan.size()));
  }

  // Every step argument must be visible at that step.
  for (std::size_t i = 0; i < e.plan.size() && i < e.visible_objects.size(); ++i) {
    for (const auto& a : e.plan[i].args) {
      if (!e.visible_objects[i].count(a)) {
        bad("visible_objects[" + std::to_string(i) + "]",
            "step argument '" + a + "' not visible at its own step");
      }
    }
  }

  // interacted_objects is definitional: exactly the non-Goto step arguments.
  std::set<std::string> expect_interacted;
  for (const auto& s : e.plan) {
    if (s.verb == Verb::GotoLocation) continue;
    expect_interacted.insert(s.args.begin(), s.args.end());
  }
  if (e.interacted_objects != expect_interacted) {
    bad("interacted_objects", "does not equal the union of non-Goto step arguments");
  }

  auto all_visible = e.visible_union();
  for (const auto& o : e.interacted_objects) {
    if (!all_visible.count(o)) {
      bad("interacted_objects", "'" + o + "' never visible in the episode");
    }
  }

  if (e.short_summary.empty()) bad("short_summary", "empty");
  return r;
}

ValidationResult validate_corpus(const std::vector<EpisodeTrace>& corpus) {
  ValidationResult r;
  std::map<std::string, int> seen_ids;
  std::set<std::string> train_layouts;
  for (const auto& e : corpus) {
    if (e.split == Split::train) train_layouts.insert(e.layout_id);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& e = corpus[i];
    auto per = validate_episode(e);
    for (auto& v : per.violations) {
      r.violations.push_back({e.episode_id + "." + v.field, v.message});
    }
    if (++seen_ids[e.episode_id] == 2) {
      r.violations.push_back({"episode_id", "duplicate id '" + e.episode_id + "'"});
    }
    if (e.split == Split::valid_unseen && train_layouts.count(e.layout_id)) {
      r.violations.push_back(
          {e.episode_id + ".layout_id",
           "valid_unseen episode uses train layout '" + e.layout_id + "'"});
    }
  }
  return r;
}

json episode_to_json(const EpisodeTrace& e) {
  json plan = json::array();
  for (const auto& s : e.plan) {
    plan.push_back({{"verb", verb_name(s.verb)}, {"args", s.args}});
  }
  json visible = json::array();
  for (const auto& vs : e.visible_objects) {
    visible.push_back(std::vector<std::string>(vs.begin(), vs.end()));
  }
  json j{{"episode_id", e.episode_id},
         {"layout_id", e.layout_id},
         {"split", split_name(e.split)},
         {"plan", plan},
         {"step_descriptions", e.step_descriptions},
         {"visible_objects", visible},
         {"interacted_objects",
          std::vector<std::string>(e.interacted_objects.begin(), e.interacted_objects.end())},
         {"short_summary", e.short_summary}};
  if (!e.frame_refs.empty()) j["frame_refs"] = e.frame_refs;
  return j;
}

EpisodeTrace episode_from_json(const json& j) {
  if (!j.is_object()) throw DataError("episode record is not a JSON object");
  EpisodeTrace e;
  try {
    e.episode_id = j.at("episode_id").get<std::string>();
    e.layout_id = j.at("layout_id").get<std::string>();
    e.split = split_from_name(j.at("split").get<std::string>());
    for (const auto& js : j.at("plan")) {
      PlanStep s;
      auto vname = js.at("verb").get<std::string>();
      auto v = verb_from_name(vname);
      if (!v) throw DataError("unknown verb: '" + vname + "'");
      s.verb = *v;
      s.args = js.at("args").get<std::vector<std::string>>();
      e.plan.push_back(std::move(s));
    }
    e.step_descriptions = j.at("step_descriptions").get<std::vector<std::string>>();
    for (const auto& jv : j.at("visible_objects")) {
      auto v = jv.get<std::vector<std::string>>();
      e.visible_objects.emplace_back(v.begin(), v.end());
    }
    auto inter = j.at("interacted_objects").get<std::vector<std::string>>();
    e.interacted_objects.insert(inter.begin(), inter.end());
    e.short_summary = j.at("short_summary").get<std::string>();
    if (j.contains("frame_refs")) {
      e.frame_refs = j.at("frame_refs").get<std::vector<std::string>>();
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad episode record: ") + ex.what());
  }
  return e;
}

std::vector<EpisodeTrace> read_corpus(const std::string& path) {
  std::vector<EpisodeTrace> out;
  for (const auto& [line_no, line] : read_jsonl_lines(path)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON", line_no, 0);
    try {
      out.push_back(episode_from_json(j));
    } catch (const DataError& ex) {
      throw ParseError(ex.what(), line_no, 0);
    }
  }
  return out;
}

void write_corpus(const std::string& path, const std::vector<EpisodeTrace>& episodes) {
  std::ostringstream ss;
  for (const auto& e : episodes) ss << episode_to_json(e).dump() << '\n';
  write_file(path, ss.str());
}

}  // namespace traceqa
