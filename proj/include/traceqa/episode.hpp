#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "traceqa/verbs.hpp"

namespace traceqa {

struct PlanStep {
  Verb verb;
  std::vector<std::string> args;

  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

enum class Split { train, valid_seen, valid_unseen };

const char* split_name(Split s);
Split split_from_name(const std::string& name);  // throws DataError

// One robot episode: a symbolic plan plus the per-step context a responder
// could have observed. Field names here match the JSONL schema one to one.
struct EpisodeTrace {
  std::string episode_id;
  std::string layout_id;
  Split split = Split::train;
  std::vector<PlanStep> plan;
  std::vector<std::string> step_descriptions;          // aligned with plan
  std::vector<std::set<std::string>> visible_objects;  // aligned with plan
  std::set<std::string> interacted_objects;            // args of non-Goto steps
  std::string short_summary;
  std::vector<std::string> frame_refs;  // optional opaque refs, may be empty

  std::set<std::string> visible_union() const;
};

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Per-episode invariants: arity, alignment of the three per-step lists,
// non-empty plan, every step argument visible at its own step,
// interacted_objects equal to the union of non-Goto step arguments.
ValidationResult validate_episode(const EpisodeTrace& e);

// Adds the corpus-level checks: episode_id uniqueness and valid_unseen
// layouts never appearing in train episodes.
ValidationResult validate_corpus(const std::vector<EpisodeTrace>& corpus);

nlohmann::json episode_to_json(const EpisodeTrace& e);
EpisodeTrace episode_from_json(const nlohmann::json& j);  // throws DataError

std::vector<EpisodeTrace> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<EpisodeTrace>& episodes);

}  // namespace traceqa
