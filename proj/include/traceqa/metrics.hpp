#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "traceqa/episode.hpp"
#include "traceqa/lexicon.hpp"
#include "traceqa/qa.hpp"
#include "traceqa/split.hpp"

namespace traceqa {

// All scoring happens on normalize_answer output tokenized on whitespace.
std::vector<std::string> answer_tokens(std::string_view text);

// Sum over pred token types of min(count in pred, count in gold), divided by
// pred length. Empty pred scores 0.
double clipped_unigram_precision(const std::vector<std::string>& pred,
                                 const std::vector<std::string>& gold);

// Corpus BLEU, n-gram orders 1..4 with uniform weights, clipped counts
// pooled across the corpus, brevity penalty exp(1 - r/c) when c <= r.
// An order with candidates but zero matches gives 0 (no smoothing); an order
// with no candidate n-grams anywhere is skipped as vacuous so that identical
// short corpora still score 1.
double corpus_bleu(const std::vector<std::pair<std::vector<std::string>,
                                               std::vector<std::string>>>& pairs);

// ROUGE-L F1 (beta = 1) for one pair; 0 when either side is empty.
double rouge_l_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

struct TypeScores {
  std::int64_t n = 0;
  double accuracy = 0.0;
  std::optional<double> precision;  // non-yes/no types
  std::optional<double> bleu;       // summaries only
  std::optional<double> rouge_l;    // summaries only
  std::optional<double> overlap;    // question types; null when no errors
};

struct EvalReport {
  std::map<QType, TypeScores> per_type;
  std::int64_t n_items = 0;
  std::int64_t n_missing = 0;  // items with no prediction, scored wrong
  // Present when scoring against a SplitSpec: the same tables restricted to
  // held-out episodes and to the rest.
  std::optional<std::map<QType, TypeScores>> heldout;
  std::optional<std::map<QType, TypeScores>> rest;
  std::int64_t n_heldout_episodes = 0;
};

// predictions: qa_id -> raw answer text. Unknown qa_ids are a DataError
// listing the offenders. The overlap column compares each question type's
// missing gold object words against the same run's long-summary prediction
// for the episode.
EvalReport score_predictions(const std::vector<QAItem>& qa,
                             const std::map<std::string, std::string>& predictions,
                             const Lexicon& lex, const SplitSpec* split = nullptr,
                             const std::vector<EpisodeTrace>* episodes = nullptr);

nlohmann::json report_to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
};

struct AggregateReport {
  int runs = 0;
  // metric name ("accuracy", "precision", ...) per qtype; metrics present in
  // every run only.
  std::map<QType, std::map<std::string, MetricSummary>> per_type;
};

// Requires >= 2 reports covering identical qtype sets; throws DataError.
AggregateReport aggregate_runs(const std::vector<EvalReport>& reports);
nlohmann::json aggregate_to_json(const AggregateReport& a);

// Prediction file I/O: JSONL of {"qa_id", "answer_text"}.
std::map<std::string, std::string> read_predictions(const std::string& path);
void write_predictions(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& preds);

}  // namespace traceqa
