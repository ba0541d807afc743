#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "traceqa/catalog.hpp"
#include "traceqa/episode.hpp"
#include "traceqa/stats.hpp"

namespace traceqa {

struct SimConfig {
  int n_train = 0;
  int n_valid_seen = 0;
  int n_valid_unseen = 0;
  std::uint64_t seed = 0;
  double distractor_visibility_rate = 0.3;  // in [0, 1]
  double unseen_layout_fraction = 0.25;     // in (0, 1)
  int workers = 1;
};

void validate_sim_config(const SimConfig& cfg);  // throws UsageError

// Layouts reserved for valid_unseen: the trailing ceil(fraction * n) of the
// catalog's layout list, at least one. Train and valid_seen draw from the
// rest.
std::vector<std::string> reserved_layouts(const WorldCatalog& catalog, double unseen_fraction);

// Deterministic in (catalog, layout_id, seed, rate). episode_id and split
// are left for the caller to assign; they play no part in sampling.
EpisodeTrace sample_episode(const WorldCatalog& catalog, const std::string& layout_id,
                            std::uint64_t seed, double distractor_rate, const Lexicon& lex);

struct CorpusBundle {
  std::vector<EpisodeTrace> episodes;  // train, then valid_seen, then valid_unseen
  CorpusStats stats;
  nlohmann::json manifest;
};

// Episode i gets seed seed_combine(cfg.seed, i); output is a pure function
// of (catalog, cfg) regardless of cfg.workers.
CorpusBundle generate_corpus(const WorldCatalog& catalog, const SimConfig& cfg, const Lexicon& lex);

// Reads an external JSONL trace file. schema_map optionally renames fields:
// {"fields": {"episode_id": "their_name", ...}} maps our field names onto
// the source's. Lines that fail to parse or validate are skipped with a
// line-numbered diagnostic; valid episodes come back normalized.
std::vector<EpisodeTrace> ingest_external(const std::string& path, const nlohmann::json& schema_map,
                                          std::vector<std::string>& diagnostics);

}  // namespace traceqa
