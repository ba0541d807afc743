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

enum class QType {
  object_yes_no,
  object_either_or,
  action_simple_yes_no,
  action_complex_yes_no,
  action_either_or,
  temporal_before_simple,
  temporal_before_complex,
  temporal_after_simple,
  temporal_after_complex,
  short_summary,
  long_summary,
  before_after_pair,  // optional, off by default
  ood_ordinary,
  ood_extraordinary,
};

const char* qtype_name(QType t);
QType qtype_from_name(const std::string& name);  // throws DataError

// The nine per-episode question types, in generation order.
extern const std::vector<QType> kQuestionTypes;
// The two summary targets.
extern const std::vector<QType> kSummaryTypes;

inline bool is_yes_no(QType t) {
  return t == QType::object_yes_no || t == QType::action_simple_yes_no ||
         t == QType::action_complex_yes_no || t == QType::before_after_pair ||
         t == QType::ood_ordinary || t == QType::ood_extraordinary;
}
inline bool is_summary(QType t) {
  return t == QType::short_summary || t == QType::long_summary;
}
inline bool is_temporal(QType t) {
  return t == QType::temporal_before_simple || t == QType::temporal_before_complex ||
         t == QType::temporal_after_simple || t == QType::temporal_after_complex;
}

struct QAItem {
  std::string qa_id;
  std::string episode_id;
  QType qtype = QType::object_yes_no;
  std::string prompt;
  std::string answer;  // stored normalized
  nlohmann::json meta; // generation details for verification, never for responders
};

nlohmann::json qa_to_json(const QAItem& item);
QAItem qa_from_json(const nlohmann::json& j);
std::vector<QAItem> read_qa_file(const std::string& path);
void write_qa_file(const std::string& path, const std::vector<QAItem>& items);

// Prompt surface forms. "{}" slots are filled in order. Defaults follow the
// fixed phrasings the OOD banks and prior responder also assume.
struct QuestionTemplates {
  std::string object_yes_no = "was there {}?";
  std::string object_either_or = "was there {} or {}?";
  std::string action_yes_no = "did you {}?";
  std::string action_either_or = "did you {} or {}?";
  std::string temporal_before = "what did you do just before {}?";
  std::string temporal_after = "what did you do just after {}?";
  std::string before_after_pair = "did you {} before {}?";
  std::string short_summary = "summarize what you did.";
  std::string long_summary = "narrate what you did.";
};

QuestionTemplates templates_from_json(const nlohmann::json& j);  // partial override

struct GenPolicy {
  int per_type_cap = 10;
  std::uint64_t seed = 0;
  enum class NegWeighting { episode, step };
  NegWeighting negative_weighting = NegWeighting::episode;
  bool enable_before_after_pairs = false;
  std::set<QType> enabled_types;  // empty means all standard types
  QuestionTemplates templates;

  bool type_enabled(QType t) const;
};

// Counters for conditions that are reported rather than fatal.
struct GenNotes {
  std::int64_t zero_negative_object_episodes = 0;
  std::int64_t zero_negative_action_episodes = 0;
  std::int64_t complex_negative_shortfalls = 0;
  std::int64_t deduplicated_items = 0;
};

// Per-episode generators. Yes/no kinds emit exactly balanced yes/no counts
// (one extra yes allowed when the cap is odd) except when one side has no
// supply at all, which is counted in notes. Either/or kinds emit items whose
// two options have exactly one episode-consistent choice. All sampling is
// seeded by (policy.seed, episode_id, qtype).
std::vector<QAItem> gen_object_questions(QType kind, const EpisodeTrace& e, const CorpusStats& stats,
                                         const GenPolicy& policy, const Lexicon& lex,
                                         GenNotes* notes = nullptr);

// For action_complex_yes_no negatives: descriptions harvested from other
// episodes, tagged with the action they realize.
struct DescriptionPool {
  struct Entry {
    std::string episode_id;
    ActionId action;
    std::string description;
  };
  std::vector<Entry> entries;
  std::map<ActionId, std::vector<std::size_t>> by_action;

  static DescriptionPool build(const std::vector<EpisodeTrace>& corpus);
};

std::vector<QAItem> gen_action_questions(QType kind, const EpisodeTrace& e, const CorpusStats& stats,
                                         const GenPolicy& policy, const Lexicon& lex,
                                         const DescriptionPool* pool = nullptr,
                                         GenNotes* notes = nullptr);

// Anchors are steps whose (verb, args) occur exactly once in the plan and
// that have the required neighbor; the answer is the adjacent step rendered
// in simple language.
std::vector<QAItem> gen_temporal_questions(QType kind, const EpisodeTrace& e,
                                           const GenPolicy& policy, const Lexicon& lex);

std::vector<QAItem> gen_before_after_pairs(const EpisodeTrace& e, const GenPolicy& policy,
                                           const Lexicon& lex);

// The two summary items; prompts are byte-identical across episodes.
std::vector<QAItem> gen_summary_prompts(const EpisodeTrace& e, const GenPolicy& policy,
                                        const Lexicon& lex);

struct StaticDataset {
  std::vector<QAItem> items;
  nlohmann::json manifest;
  GenNotes notes;
};

// Every enabled type for every episode, capped per (episode, type),
// deduplicated on (episode_id, prompt). Output is a pure function of
// (corpus, stats, policy) regardless of workers.
StaticDataset build_static_dataset(const std::vector<EpisodeTrace>& corpus, const CorpusStats& stats,
                                   const GenPolicy& policy, const Lexicon& lex, int workers = 1);

// One training epoch: episodes in an epoch-seeded order, each carrying both
// summary items plus one freshly sampled item per available question type.
// Yes/no kinds flip a fair coin per draw.
struct EpochEntry {
  std::size_t episode_index;
  std::vector<QAItem> items;
};

std::vector<EpochEntry> epoch_stream(const std::vector<EpisodeTrace>& corpus, const CorpusStats& stats,
                                     const GenPolicy& policy, std::uint64_t epoch_seed,
                                     const Lexicon& lex);

// Out-of-domain probe banks: plain yes/no questions whose correct answer is
// always "no". Ordinary items sound like household chores; extraordinary
// items do not belong in a house at all.
struct OodBank {
  std::vector<std::string> ordinary;
  std::vector<std::string> extraordinary;
};

OodBank default_ood_bank();
OodBank ood_bank_from_json(const nlohmann::json& j);

// Exactly 50 items per set (the first 50 of each bank list). A bank question
// containing both a catalog verb phrase and a catalog object phrase as token
// runs is contamination: DataError naming the item.
std::pair<std::vector<QAItem>, std::vector<QAItem>> gen_ood_sets(const OodBank& bank,
                                                                 const Lexicon& lex);

}  // namespace traceqa
