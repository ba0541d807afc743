#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "traceqa/episode.hpp"
#include "traceqa/lexicon.hpp"
#include "traceqa/stats.hpp"

namespace traceqa {

// Zero-shot hold-out description. The eligibility masks cover the train
// split: qa_training is every train episode (question answering always
// trains on everything); summary_training excludes the held-out episodes.
struct SplitSpec {
  std::vector<std::string> heldout_objects;  // empty in verb mode
  std::optional<std::string> heldout_verb;   // set in verb mode
  std::set<std::string> heldout_episode_ids; // train episodes matching the hold-out
  std::set<std::string> qa_training;
  std::set<std::string> summary_training;
  std::uint64_t seed = 0;
  std::vector<std::string> ranking_snapshot;
};

// Objects ordered by long-summary mention count, descending; ties break
// lexicographically ascending. use_visibility switches the ranking key to
// episode visibility counts.
std::vector<std::string> rank_objects(const CorpusStats& stats, bool use_visibility = false);

// Uniform 5-subset of ranking positions 11..30 (1-indexed): frequent enough
// to matter, but never the ten most common objects. Throws DataError when
// the ranking has fewer than 30 entries.
std::vector<std::string> select_heldout(const std::vector<std::string>& ranking, std::uint64_t seed);

// True when the episode's rendered long summary contains the object's noun
// phrase as a contiguous token run.
bool summary_mentions_object(const EpisodeTrace& e, const std::string& symbol, const Lexicon& lex);

bool plan_uses_verb(const EpisodeTrace& e, Verb v);

SplitSpec partition_by_objects(const std::vector<EpisodeTrace>& corpus,
                               const std::vector<std::string>& heldout_objects, std::uint64_t seed,
                               const Lexicon& lex, const std::vector<std::string>& ranking,
                               std::vector<std::string>* warnings = nullptr);

SplitSpec partition_by_verb(const std::vector<EpisodeTrace>& corpus, Verb heldout_verb,
                            std::uint64_t seed, const Lexicon& lex,
                            std::vector<std::string>* warnings = nullptr);

// Hold-out membership for any episode (train episodes via the id list,
// others by re-testing the hold-out condition).
bool is_heldout_episode(const SplitSpec& spec, const EpisodeTrace& e, const Lexicon& lex);

nlohmann::json split_to_json(const SplitSpec& spec);
SplitSpec split_from_json(const nlohmann::json& j);
SplitSpec load_split(const std::string& path);

}  // namespace traceqa
