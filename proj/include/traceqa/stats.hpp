#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "traceqa/episode.hpp"
#include "traceqa/lexicon.hpp"

namespace traceqa {

// An action's identity for "was it performed" purposes: verb plus first
// argument. "put the pen on the desk" and "put the pen on the shelf" are the
// same action under this identity.
struct ActionId {
  Verb verb;
  std::string object;

  friend bool operator==(const ActionId&, const ActionId&) = default;
  friend auto operator<=>(const ActionId& a, const ActionId& b) {
    if (auto c = static_cast<int>(a.verb) <=> static_cast<int>(b.verb); c != 0) return c;
    return a.object <=> b.object;
  }
};

// Corpus-level frequency tables. All counts merge by addition and the phrase
// maps by lexicographic minimum, so stats computed over any partition of a
// corpus merge to the same result as a single pass.
struct CorpusStats {
  std::int64_t n_episodes = 0;

  // Episodes in which the object was ever visible.
  std::map<std::string, std::int64_t> object_visibility_freq;
  // Steps (across the whole corpus) at which the object was visible; the
  // alternative negative-sampling weighting.
  std::map<std::string, std::int64_t> object_step_visibility_freq;
  // Episodes whose rendered long summary contains the object's noun phrase
  // as a token run. Tallied against the lexicon's whole object universe so
  // partitioned computation stays associative; see summary_freq().
  std::map<std::string, std::int64_t> object_mention_freq;

  // Episodes performing the action.
  std::map<ActionId, std::int64_t> action_freq;
  // Every rendered step phrase observed, with the action it realizes.
  std::map<std::string, ActionId> rendering_action;
  // Lexicographically least observed rendering per action: the deterministic
  // phrase used when asking about an action the episode did not perform.
  std::map<ActionId, std::string> action_phrase;
  // Adjacent-step transitions, keyed by rendered phrases; counts are
  // occurrences, not episodes.
  std::map<std::pair<std::string, std::string>, std::int64_t> successor_freq;

  // object_mention_freq restricted to objects with nonzero visibility
  // (zero-mention visible objects included with count 0).
  std::map<std::string, std::int64_t> summary_freq() const;

  std::int64_t action_count_for_phrase(const std::string& phrase) const;
  // Representative phrase of the most frequent action; ties break toward the
  // lexicographically smaller phrase. Empty when there are no actions.
  std::string most_frequent_action_phrase() const;
};

CorpusStats compute_stats(const std::vector<EpisodeTrace>& corpus, const Lexicon& lex);
void merge_stats(CorpusStats& into, const CorpusStats& other);

nlohmann::json stats_to_json(const CorpusStats& s);
CorpusStats stats_from_json(const nlohmann::json& j);

}  // namespace traceqa
