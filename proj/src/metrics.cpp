#include "traceqa/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "traceqa/errors.hpp"
#include "traceqa/util.hpp"
#include "traceqa/version.hpp"

namespace traceqa {

using nlohmann::json;

std::vector<std::string> answer_tokens(std::string_view text) {
  return split_tokens(normalize_answer(text));
}

namespace {

std::map<std::string, std::int64_t> token_counts(const std::vector<std::string>& toks) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& t : toks) counts[t]++;
  return counts;
}

std::map<std::vector<std::string>, std::int64_t> ngram_counts(const std::vector<std::string>& toks,
                                                              std::size_t k) {
  std::map<std::vector<std::string>, std::int64_t> counts;
  if (toks.size() < k) return counts;
  for (std::size_t i = 0; i + k <= toks.size(); ++i) {
    counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + k)]++;
  }
  return counts;
}

}  // namespace

double clipped_unigram_precision(const std::vector<std::string>& pred,
                                 const std::vector<std::string>& gold) {
  if (pred.empty()) return 0.0;
  auto gold_counts = token_counts(gold);
  std::int64_t hits = 0;
  for (const auto& [tok, count] : token_counts(pred)) {
    auto it = gold_counts.find(tok);
    if (it != gold_counts.end()) hits += std::min(count, it->second);
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double corpus_bleu(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& pairs) {
  if (pairs.empty()) throw DataError("BLEU needs a non-empty corpus");
  constexpr std::size_t kMaxOrder = 4;
  std::int64_t num[kMaxOrder] = {0, 0, 0, 0};
  std::int64_t den[kMaxOrder] = {0, 0, 0, 0};
  std::int64_t pred_len = 0, gold_len = 0;

  for (const auto& [pred, gold] : pairs) {
    pred_len += static_cast<std::int64_t>(pred.size());
    gold_len += static_cast<std::int64_t>(gold.size());
    for (std::size_t k = 1; k <= kMaxOrder; ++k) {
      if (pred.size() < k) continue;
      den[k - 1] += static_cast<std::int64_t>(pred.size() - k + 1);
      auto gold_ngrams = ngram_counts(gold, k);
      for (const auto& [gram, count] : ngram_counts(pred, k)) {
        auto it = gold_ngrams.find(gram);
        if (it != gold_ngrams.end()) num[k - 1] += std::min(count, it->second);
      }
    }
  }

  if (pred_len == 0) return 0.0;
  // Orders with no candidate n-grams anywhere carry no evidence and are
  // skipped; an order with candidates but no matches zeroes the score.
  double log_sum = 0.0;
  int active = 0;
  for (std::size_t k = 0; k < kMaxOrder; ++k) {
    if (den[k] == 0) continue;
    if (num[k] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(num[k]) / static_cast<double>(den[k]));
    active++;
  }
  if (active == 0) return 0.0;
  double bp = pred_len > gold_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(gold_len) / static_cast<double>(pred_len));
  return bp * std::exp(log_sum / active);
}

double rouge_l_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() || gold.empty()) return 0.0;
  // One-row LCS table.
  std::vector<std::int64_t> row(gold.size() + 1, 0);
  for (std::size_t i = 1; i <= pred.size(); ++i) {
    std::int64_t diag = 0;
    for (std::size_t j = 1; j <= gold.size(); ++j) {
      std::int64_t tmp = row[j];
      row[j] = pred[i - 1] == gold[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = tmp;
    }
  }
  std::int64_t lcs = row[gold.size()];
  if (lcs == 0) return 0.0;
  double p = static_cast<double>(lcs) / static_cast<double>(pred.size());
  double r = static_cast<double>(lcs) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

namespace {

// Tokens that name catalog objects; multi-word names contribute each word.
std::set<std::string> object_word_set(const Lexicon& lex) {
  std::set<std::string> words;
  for (const auto& [sym, phrase] : lex.objects) {
    for (const auto& tok : split_tokens(phrase)) words.insert(tok);
  }
  return words;
}

struct ScoredItem {
  const QAItem* item;
  std::vector<std::string> pred_tokens;
  std::vector<std::string> gold_tokens;
  bool has_prediction = false;
  bool exact = false;
};

TypeScores score_type(QType t, const std::vector<const ScoredItem*>& items,
                      const std::map<std::string, std::vector<std::string>>& long_preds,
                      const std::set<std::string>& object_words) {
  TypeScores s;
  s.n = static_cast<std::int64_t>(items.size());
  if (items.empty()) return s;

  std::int64_t exact = 0;
  for (const auto* it : items) exact += it->exact ? 1 : 0;
  s.accuracy = static_cast<double>(exact) / static_cast<double>(items.size());

  if (!is_yes_no(t)) {
    double sum = 0.0;
    for (const auto* it : items) sum += clipped_unigram_precision(it->pred_tokens, it->gold_tokens);
    s.precision = sum / static_cast<double>(items.size());
  }

  if (is_summary(t)) {
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
    double rouge_sum = 0.0;
    for (const auto* it : items) {
      pairs.push_back({it->pred_tokens, it->gold_tokens});
      rouge_sum += rouge_l_f1(it->pred_tokens, it->gold_tokens);
    }
    s.bleu = corpus_bleu(pairs);
    s.rouge_l = rouge_sum / static_cast<double>(items.size());
  } else {
    // Missing-object-word errors, deduplicated per (episode, word).
    std::set<std::pair<std::string, std::string>> errors;
    for (const auto* it : items) {
      std::set<std::string> pred_set(it->pred_tokens.begin(), it->pred_tokens.end());
      for (const auto& tok : it->gold_tokens) {
        if (object_words.count(tok) && !pred_set.count(tok)) {
          errors.insert({it->item->episode_id, tok});
        }
      }
    }
    if (!errors.empty()) {
      std::int64_t shared = 0;
      for (const auto& [episode_id, word] : errors) {
        auto lp = long_preds.find(episode_id);
        if (lp == long_preds.end()) {
          throw DataError("overlap metric needs a long-summary prediction for episode '" +
                          episode_id + "'");
        }
        bool in_summary =
            std::find(lp->second.begin(), lp->second.end(), word) != lp->second.end();
        if (!in_summary) shared++;
      }
      s.overlap = static_cast<double>(shared) / static_cast<double>(errors.size());
    }
  }
  return s;
}

std::map<QType, TypeScores> score_groups(const std::vector<ScoredItem>& scored,
                                         const std::vector<bool>* mask, bool keep,
                                         const std::map<std::string, std::vector<std::string>>& long_preds,
                                         const std::set<std::string>& object_words) {
  std::map<QType, std::vector<const ScoredItem*>> groups;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (mask && (*mask)[i] != keep) continue;
    groups[scored[i].item->qtype].push_back(&scored[i]);
  }
  std::map<QType, TypeScores> out;
  for (const auto& [t, items] : groups) {
    out[t] = score_type(t, items, long_preds, object_words);
  }
  return out;
}

}  // namespace

EvalReport score_predictions(const std::vector<QAItem>& qa,
                             const std::map<std::string, std::string>& predictions,
                             const Lexicon& lex, const SplitSpec* split,
                             const std::vector<EpisodeTrace>* episodes) {
  std::set<std::string> known;
  for (const auto& item : qa) known.insert(item.qa_id);
  std::vector<std::string> offenders;
  for (const auto& [qa_id, text] : predictions) {
    if (!known.count(qa_id)) offenders.push_back(qa_id);
  }
  if (!offenders.empty()) {
    throw DataError("predictions reference unknown question ids: " + join(offenders, ", "));
  }

  std::vector<ScoredItem> scored;
  scored.reserve(qa.size());
  EvalReport report;
  report.n_items = static_cast<std::int64_t>(qa.size());
  std::map<std::string, std::vector<std::string>> long_preds;
  for (const auto& item : qa) {
    ScoredItem si;
    si.item = &item;
    si.gold_tokens = answer_tokens(item.answer);
    auto p = predictions.find(item.qa_id);
    if (p != predictions.end()) {
      si.has_prediction = true;
      si.pred_tokens = answer_tokens(p->second);
      si.exact = normalize_answer(p->second) == normalize_answer(item.answer);
      if (item.qtype == QType::long_summary) long_preds[item.episode_id] = si.pred_tokens;
    } else {
      report.n_missing++;
    }
    scored.push_back(std::move(si));
  }

  std::set<std::string> object_words = object_word_set(lex);
  report.per_type = score_groups(scored, nullptr, true, long_preds, object_words);

  if (split) {
    std::map<std::string, const EpisodeTrace*> by_id;
    if (episodes) {
      for (const auto& e : *episodes) by_id[e.episode_id] = &e;
    }
    std::vector<bool> heldout_mask(scored.size(), false);
    std::set<std::string> heldout_ids;
    for (std::size_t i = 0; i < scored.size(); ++i) {
      const std::string& episode_id = scored[i].item->episode_id;
      bool held;
      auto it = by_id.find(episode_id);
      if (it != by_id.end()) {
        held = is_heldout_episode(*split, *it->second, lex);
      } else {
        held = split->heldout_episode_ids.count(episode_id) > 0;
      }
      heldout_mask[i] = held;
      if (held) heldout_ids.insert(episode_id);
    }
    report.heldout = score_groups(scored, &heldout_mask, true, long_preds, object_words);
    report.rest = score_groups(scored, &heldout_mask, false, long_preds, object_words);
    report.n_heldout_episodes = static_cast<std::int64_t>(heldout_ids.size());
  }
  return report;
}

namespace {

json type_scores_to_json(const std::map<QType, TypeScores>& per_type) {
  json out = json::object();
  for (const auto& [t, s] : per_type) {
    json row{{"n", s.n}, {"accuracy", s.accuracy}};
    if (s.precision) row["precision"] = *s.precision;
    if (is_summary(t)) {
      row["bleu"] = s.bleu ? json(*s.bleu) : json();
      row["rouge_l"] = s.rouge_l ? json(*s.rouge_l) : json();
    } else {
      row["overlap"] = s.overlap ? json(*s.overlap) : json();
    }
    out[qtype_name(t)] = std::move(row);
  }
  return out;
}

std::map<QType, TypeScores> type_scores_from_json(const json& j) {
  std::map<QType, TypeScores> out;
  for (const auto& [name, row] : j.items()) {
    TypeScores s;
    s.n = row.at("n").get<std::int64_t>();
    s.accuracy = row.at("accuracy").get<double>();
    if (row.contains("precision") && !row.at("precision").is_null()) {
      s.precision = row.at("precision").get<double>();
    }
    if (row.contains("bleu") && !row.at("bleu").is_null()) s.bleu = row.at("bleu").get<double>();
    if (row.contains("rouge_l") && !row.at("rouge_l").is_null()) {
      s.rouge_l = row.at("rouge_l").get<double>();
    }
    if (row.contains("overlap") && !row.at("overlap").is_null()) {
      s.overlap = row.at("overlap").get<double>();
    }
    out[qtype_from_name(name)] = s;
  }
  return out;
}

}  // namespace

json report_to_json(const EvalReport& r) {
  json j{{"format_version", kFormatVersion},
         {"tool_version", kToolVersion},
         {"kind", "eval_report"},
         {"metric_variants",
          {{"bleu", "corpus_bleu_4gram_uniform"}, {"rouge_l", "rouge_l_f1"}}},
         {"n_items", r.n_items},
         {"n_missing", r.n_missing},
         {"per_type", type_scores_to_json(r.per_type)}};
  if (r.heldout) {
    j["heldout"] = type_scores_to_json(*r.heldout);
    j["rest"] = type_scores_to_json(*r.rest);
    j["n_heldout_episodes"] = r.n_heldout_episodes;
  }
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  try {
    r.n_items = j.at("n_items").get<std::int64_t>();
    r.n_missing = j.at("n_missing").get<std::int64_t>();
    r.per_type = type_scores_from_json(j.at("per_type"));
    if (j.contains("heldout")) {
      r.heldout = type_scores_from_json(j.at("heldout"));
      r.rest = type_scores_from_json(j.at("rest"));
      r.n_heldout_episodes = j.value("n_heldout_episodes", std::int64_t{0});
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad evaluation report: ") + ex.what());
  }
  return r;
}

AggregateReport aggregate_runs(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) throw DataError("aggregation needs at least 2 runs");
  std::set<QType> types;
  for (const auto& [t, s] : reports[0].per_type) types.insert(t);
  for (const auto& r : reports) {
    std::set<QType> other;
    for (const auto& [t, s] : r.per_type) other.insert(t);
    if (other != types) throw DataError("reports cover different question-type sets");
  }

  AggregateReport agg;
  agg.runs = static_cast<int>(reports.size());
  for (QType t : types) {
    std::map<std::string, std::vector<double>> columns;
    auto collect = [&](const char* name, auto getter) {
      std::vector<double> values;
      for (const auto& r : reports) {
        auto v = getter(r.per_type.at(t));
        if (!v) return;  // present in every run or not aggregated
        values.push_back(*v);
      }
      columns[name] = std::move(values);
    };
    collect("accuracy", [](const TypeScores& s) { return std::optional<double>(s.accuracy); });
    collect("precision", [](const TypeScores& s) { return s.precision; });
    collect("bleu", [](const TypeScores& s) { return s.bleu; });
    collect("rouge_l", [](const TypeScores& s) { return s.rouge_l; });
    collect("overlap", [](const TypeScores& s) { return s.overlap; });

    for (const auto& [name, values] : columns) {
      MetricSummary m;
      double sum = 0.0;
      for (double v : values) sum += v;
      m.mean = sum / static_cast<double>(values.size());
      double sq = 0.0;
      for (double v : values) sq += (v - m.mean) * (v - m.mean);
      m.stddev = values.size() > 1
                     ? std::sqrt(sq / static_cast<double>(values.size() - 1))
                     : 0.0;
      agg.per_type[t][name] = m;
    }
  }
  return agg;
}

json aggregate_to_json(const AggregateReport& a) {
  json per_type = json::object();
  for (const auto& [t, metrics] : a.per_type) {
    json row = json::object();
    for (const auto& [name, m] : metrics) {
      row[name] = {{"mean", m.mean}, {"stddev", m.stddev}};
    }
    per_type[qtype_name(t)] = std::move(row);
  }
  return json{{"format_version", kFormatVersion},
              {"tool_version", kToolVersion},
              {"kind", "aggregate_report"},
              {"runs", a.runs},
              {"per_type", per_type}};
}

std::map<std::string, std::string> read_predictions(const std::string& path) {
  std::map<std::string, std::string> out;
  for (const auto& [line_no, line] : read_jsonl_lines(path)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON", line_no, 0);
    std::string qa_id, answer;
    try {
      qa_id = j.at("qa_id").get<std::string>();
      answer = j.at("answer_text").get<std::string>();
    } catch (const json::exception& ex) {
      throw ParseError(std::string("bad prediction record: ") + ex.what(), line_no, 0);
    }
    if (!out.emplace(qa_id, answer).second) {
      throw ParseError("duplicate prediction for '" + qa_id + "'", line_no, 0);
    }
  }
  return out;
}

void write_predictions(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& preds) {
  std::string buf;
  for (const auto& [qa_id, answer] : preds) {
    buf += json{{"qa_id", qa_id}, {"answer_text", answer}}.dump();
    buf += '\n';
  }
  write_file(path, buf);
}

}  // namespace traceqa
