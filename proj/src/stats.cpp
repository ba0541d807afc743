#include "traceqa/stats.hpp"

#include <algorithm>

#include "traceqa/errors.hpp"
#include "traceqa/util.hpp"

namespace traceqa {

using nlohmann::json;

std::map<std::string, std::int64_t> CorpusStats::summary_freq() const {
  std::map<std::string, std::int64_t> out;
  for (const auto& [sym, vis] : object_visibility_freq) {
    (void)vis;
    auto it = object_mention_freq.find(sym);
    out[sym] = it == object_mention_freq.end() ? 0 : it->second;
  }
  return out;
}

std::int64_t CorpusStats::action_count_for_phrase(const std::string& phrase) const {
  auto it = rendering_action.find(phrase);
  if (it == rendering_action.end()) return 0;
  auto fit = action_freq.find(it->second);
  return fit == action_freq.end() ? 0 : fit->second;
}

std::string CorpusStats::most_frequent_action_phrase() const {
  std::string best;
  std::int64_t best_count = -1;
  for (const auto& [action, count] : action_freq) {
    auto pit = action_phrase.find(action);
    if (pit == action_phrase.end()) continue;
    if (count > best_count || (count == best_count && pit->second < best)) {
      best_count = count;
      best = pit->second;
    }
  }
  return best;
}

CorpusStats compute_stats(const std::vector<EpisodeTrace>& corpus, const Lexicon& lex) {
  CorpusStats s;
  s.n_episodes = static_cast<std::int64_t>(corpus.size());

  // Mention candidates come from the lexicon, not the corpus, so that stats
  // over any partition merge to the full-corpus result.
  std::vector<std::pair<std::string, std::vector<std::string>>> candidates;
  candidates.reserve(lex.objects.size());
  for (const auto& [sym, phrase] : lex.objects) {
    candidates.emplace_back(sym, split_tokens(phrase));
  }

  for (const auto& e : corpus) {
    for (const auto& sym : e.visible_union()) s.object_visibility_freq[sym] += 1;
    for (const auto& step_set : e.visible_objects) {
      for (const auto& sym : step_set) s.object_step_visibility_freq[sym] += 1;
    }

    std::vector<std::string> rendered;
    rendered.reserve(e.plan.size());
    std::set<ActionId> performed;
    for (const auto& step : e.plan) {
      rendered.push_back(render_step_lenient(step, lex));
      performed.insert({step.verb, step.args.at(0)});
      ActionId id{step.verb, step.args.at(0)};
      auto [it, fresh] = s.action_phrase.emplace(id, rendered.back());
      if (!fresh && rendered.back() < it->second) it->second = rendered.back();
      s.rendering_action.emplace(rendered.back(), id);
    }
    for (const auto& id : performed) s.action_freq[id] += 1;
    for (std::size_t i = 0; i + 1 < rendered.size(); ++i) {
      s.successor_freq[{rendered[i], rendered[i + 1]}] += 1;
    }

    auto summary_toks = split_tokens(render_long_summary(e.plan, lex));
    // render_long_summary output ends with '.', which sticks to the last
    // token; strip trailing punctuation so token runs match cleanly.
    for (auto& t : summary_toks) {
      while (!t.empty() && (t.back() == '.' || t.back() == ',')) t.pop_back();
    }
    for (const auto& [sym, needle] : candidates) {
      if (contains_token_run(summary_toks, needle)) s.object_mention_freq[sym] += 1;
    }
  }
  return s;
}

void merge_stats(CorpusStats& into, const CorpusStats& other) {
  into.n_episodes += other.n_episodes;
  for (const auto& [k, v] : other.object_visibility_freq) into.object_visibility_freq[k] += v;
  for (const auto& [k, v] : other.object_step_visibility_freq) {
    into.object_step_visibility_freq[k] += v;
  }
  for (const auto& [k, v] : other.object_mention_freq) into.object_mention_freq[k] += v;
  for (const auto& [k, v] : other.action_freq) into.action_freq[k] += v;
  for (const auto& [k, v] : other.rendering_action) into.rendering_action.emplace(k, v);
  for (const auto& [k, v] : other.action_phrase) {
    auto [it, fresh] = into.action_phrase.emplace(k, v);
    if (!fresh && v < it->second) it->second = v;
  }
  for (const auto& [k, v] : other.successor_freq) into.successor_freq[k] += v;
}

json stats_to_json(const CorpusStats& s) {
  json actions = json::array();
  for (const auto& [id, count] : s.action_freq) {
    auto pit = s.action_phrase.find(id);
    actions.push_back({{"verb", verb_name(id.verb)},
                       {"object", id.object},
                       {"count", count},
                       {"phrase", pit == s.action_phrase.end() ? "" : pit->second}});
  }
  json renderings = json::object();
  for (const auto& [phrase, id] : s.rendering_action) {
    renderings[phrase] = {{"verb", verb_name(id.verb)}, {"object", id.object}};
  }
  json successors = json::array();
  for (const auto& [key, count] : s.successor_freq) {
    successors.push_back({key.first, key.second, count});
  }
  return json{{"format_version", 1},
              {"n_episodes", s.n_episodes},
              {"object_visibility_freq", s.object_visibility_freq},
              {"object_step_visibility_freq", s.object_step_visibility_freq},
              {"object_mention_freq", s.object_mention_freq},
              {"object_summary_freq", s.summary_freq()},
              {"action_freq", actions},
              {"rendering_action", renderings},
              {"successor_freq", successors}};
}

CorpusStats stats_from_json(const json& j) {
  CorpusStats s;
  try {
    s.n_episodes = j.at("n_episodes").get<std::int64_t>();
    s.object_visibility_freq =
        j.at("object_visibility_freq").get<std::map<std::string, std::int64_t>>();
    s.object_step_visibility_freq =
        j.at("object_step_visibility_freq").get<std::map<std::string, std::int64_t>>();
    s.object_mention_freq = j.at("object_mention_freq").get<std::map<std::string, std::int64_t>>();
    for (const auto& a : j.at("action_freq")) {
      auto v = verb_from_name(a.at("verb").get<std::string>());
      if (!v) throw DataError("unknown verb in stats: " + a.at("verb").dump());
      ActionId id{*v, a.at("object").get<std::string>()};
      s.action_freq[id] = a.at("count").get<std::int64_t>();
      auto phrase = a.at("phrase").get<std::string>();
      if (!phrase.empty()) s.action_phrase[id] = phrase;
    }
    for (const auto& [phrase, jid] : j.at("rendering_action").items()) {
      auto v = verb_from_name(jid.at("verb").get<std::string>());
      if (!v) throw DataError("unknown verb in stats: " + jid.at("verb").dump());
      s.rendering_action[phrase] = {*v, jid.at("object").get<std::string>()};
    }
    for (const auto& row : j.at("successor_freq")) {
      s.successor_freq[{row.at(0).get<std::string>(), row.at(1).get<std::string>()}] =
          row.at(2).get<std::int64_t>();
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad stats document: ") + ex.what());
  }
  return s;
}

}  // namespace traceqa
