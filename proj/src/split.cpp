#include "traceqa/split.hpp"

#include <algorithm>

#include "traceqa/errors.hpp"
#include "traceqa/rng.hpp"
#include "traceqa/util.hpp"
#include "traceqa/version.hpp"

namespace traceqa {

using nlohmann::json;

std::vector<std::string> rank_objects(const CorpusStats& stats, bool use_visibility) {
  std::map<std::string, std::int64_t> freq =
      use_visibility ? stats.object_visibility_freq : stats.summary_freq();
  std::vector<std::pair<std::string, std::int64_t>> rows(freq.begin(), freq.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& [sym, count] : rows) out.push_back(sym);
  return out;
}

std::vector<std::string> select_heldout(const std::vector<std::string>& ranking,
                                        std::uint64_t seed) {
  if (ranking.size() < 30) {
    throw DataError("insufficient vocabulary: ranking has " + std::to_string(ranking.size()) +
                    " objects, hold-out selection needs 30");
  }
  Rng rng(seed_combine(seed, fnv1a64("heldout_select")));
  std::vector<std::string> out;
  for (std::size_t i : rng.subset(20, 5)) out.push_back(ranking[10 + i]);
  return out;
}

bool summary_mentions_object(const EpisodeTrace& e, const std::string& symbol, const Lexicon& lex) {
  std::vector<std::string> summary_tokens =
      split_tokens(normalize_answer(render_long_summary(e.plan, lex)));
  for (auto& tok : summary_tokens) {
    while (!tok.empty() && (tok.back() == ',' || tok.back() == '.')) tok.pop_back();
  }
  return contains_token_run(summary_tokens, split_tokens(lex.object_phrase_lenient(symbol)));
}

bool plan_uses_verb(const EpisodeTrace& e, Verb v) {
  for (const auto& s : e.plan) {
    if (s.verb == v) return true;
  }
  return false;
}

namespace {

// Fills the episode-id masks from a hold-out membership predicate; masks
// always cover exactly the train split.
template <typename Pred>
void fill_masks(SplitSpec& spec, const std::vector<EpisodeTrace>& corpus, Pred heldout) {
  for (const auto& e : corpus) {
    if (e.split != Split::train) continue;
    spec.qa_training.insert(e.episode_id);
    if (heldout(e)) spec.heldout_episode_ids.insert(e.episode_id);
    else spec.summary_training.insert(e.episode_id);
  }
}

}  // namespace

SplitSpec partition_by_objects(const std::vector<EpisodeTrace>& corpus,
                               const std::vector<std::string>& heldout_objects, std::uint64_t seed,
                               const Lexicon& lex, const std::vector<std::string>& ranking,
                               std::vector<std::string>* warnings) {
  SplitSpec spec;
  spec.heldout_objects = heldout_objects;
  spec.seed = seed;
  spec.ranking_snapshot = ranking;

  fill_masks(spec, corpus, [&](const EpisodeTrace& e) {
    for (const auto& sym : heldout_objects) {
      if (summary_mentions_object(e, sym, lex)) return true;
    }
    return false;
  });

  if (warnings) {
    for (const auto& sym : heldout_objects) {
      bool mentioned = false;
      for (const auto& e : corpus) {
        if (e.split == Split::train && summary_mentions_object(e, sym, lex)) {
          mentioned = true;
          break;
        }
      }
      if (!mentioned) {
        warnings->push_back("held-out object '" + sym +
                            "' is mentioned by no training episode; it contributes nothing");
      }
    }
  }
  return spec;
}

SplitSpec partition_by_verb(const std::vector<EpisodeTrace>& corpus, Verb heldout_verb,
                            std::uint64_t seed, const Lexicon& lex,
                            std::vector<std::string>* warnings) {
  (void)lex;
  SplitSpec spec;
  spec.heldout_verb = verb_name(heldout_verb);
  spec.seed = seed;

  fill_masks(spec, corpus, [&](const EpisodeTrace& e) { return plan_uses_verb(e, heldout_verb); });

  if (warnings && spec.heldout_episode_ids.empty()) {
    warnings->push_back(std::string("held-out verb ") + verb_name(heldout_verb) +
                        " appears in no training episode");
  }
  return spec;
}

bool is_heldout_episode(const SplitSpec& spec, const EpisodeTrace& e, const Lexicon& lex) {
  if (e.split == Split::train) return spec.heldout_episode_ids.count(e.episode_id) > 0;
  if (spec.heldout_verb) {
    std::optional<Verb> v = verb_from_name(*spec.heldout_verb);
    if (!v) throw DataError("split names unknown verb '" + *spec.heldout_verb + "'");
    return plan_uses_verb(e, *v);
  }
  for (const auto& sym : spec.heldout_objects) {
    if (summary_mentions_object(e, sym, lex)) return true;
  }
  return false;
}

json split_to_json(const SplitSpec& spec) {
  json j{{"format_version", kFormatVersion},
         {"tool_version", kToolVersion},
         {"kind", "split_spec"},
         {"heldout_objects", spec.heldout_objects},
         {"heldout_episode_ids", spec.heldout_episode_ids},
         {"task_eligibility",
          {{"qa_training", spec.qa_training}, {"summary_training", spec.summary_training}}},
         {"seed", spec.seed},
         {"ranking_snapshot", spec.ranking_snapshot}};
  if (spec.heldout_verb) j["heldout_verb"] = *spec.heldout_verb;
  return j;
}

SplitSpec split_from_json(const json& j) {
  SplitSpec spec;
  try {
    spec.heldout_objects = j.at("heldout_objects").get<std::vector<std::string>>();
    spec.heldout_episode_ids = j.at("heldout_episode_ids").get<std::set<std::string>>();
    const json& masks = j.at("task_eligibility");
    spec.qa_training = masks.at("qa_training").get<std::set<std::string>>();
    spec.summary_training = masks.at("summary_training").get<std::set<std::string>>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.ranking_snapshot = j.value("ranking_snapshot", std::vector<std::string>{});
    if (j.contains("heldout_verb")) {
      spec.heldout_verb = j.at("heldout_verb").get<std::string>();
      if (!verb_from_name(*spec.heldout_verb)) {
        throw DataError("split file names unknown verb '" + *spec.heldout_verb + "'");
      }
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad split file: ") + ex.what());
  }
  for (const auto& id : spec.heldout_episode_ids) {
    if (spec.summary_training.count(id)) {
      throw DataError("split file lists '" + id + "' as both held out and summary-eligible");
    }
    if (!spec.qa_training.count(id)) {
      throw DataError("held-out episode '" + id + "' is missing from qa_training");
    }
  }
  return spec;
}

SplitSpec load_split(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError("invalid JSON in split file: " + path);
  return split_from_json(j);
}

}  // namespace traceqa
