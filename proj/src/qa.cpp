#include "traceqa/qa.hpp"

#include <algorithm>
#include <sstream>

#include "traceqa/errors.hpp"
#include "traceqa/rng.hpp"
#include "traceqa/util.hpp"
#include "traceqa/version.hpp"

namespace traceqa {

using nlohmann::json;

namespace {

struct QTypeName {
  QType type;
  const char* name;
};

constexpr QTypeName kQTypeNames[] = {
    {QType::object_yes_no, "object_yes_no"},
    {QType::object_either_or, "object_either_or"},
    {QType::action_simple_yes_no, "action_simple_yes_no"},
    {QType::action_complex_yes_no, "action_complex_yes_no"},
    {QType::action_either_or, "action_either_or"},
    {QType::temporal_before_simple, "temporal_before_simple"},
    {QType::temporal_before_complex, "temporal_before_complex"},
    {QType::temporal_after_simple, "temporal_after_simple"},
    {QType::temporal_after_complex, "temporal_after_complex"},
    {QType::short_summary, "short_summary"},
    {QType::long_summary, "long_summary"},
    {QType::before_after_pair, "before_after_pair"},
    {QType::ood_ordinary, "ood_ordinary"},
    {QType::ood_extraordinary, "ood_extraordinary"},
};

}  // namespace

const char* qtype_name(QType t) {
  for (const auto& e : kQTypeNames) {
    if (e.type == t) return e.name;
  }
  throw DataError("unnamed question type");
}

QType qtype_from_name(const std::string& name) {
  for (const auto& e : kQTypeNames) {
    if (name == e.name) return e.type;
  }
  throw DataError("unknown question type: '" + name + "'");
}

const std::vector<QType> kQuestionTypes = {
    QType::object_yes_no,          QType::object_either_or,
    QType::action_simple_yes_no,   QType::action_complex_yes_no,
    QType::action_either_or,       QType::temporal_before_simple,
    QType::temporal_before_complex, QType::temporal_after_simple,
    QType::temporal_after_complex,
};

const std::vector<QType> kSummaryTypes = {QType::short_summary, QType::long_summary};

json qa_to_json(const QAItem& item) {
  json j{{"qa_id", item.qa_id},
         {"episode_id", item.episode_id},
         {"qtype", qtype_name(item.qtype)},
         {"prompt", item.prompt},
         {"answer", item.answer}};
  if (!item.meta.is_null() && !item.meta.empty()) j["meta"] = item.meta;
  return j;
}

QAItem qa_from_json(const json& j) {
  QAItem item;
  try {
    item.qa_id = j.at("qa_id").get<std::string>();
    item.episode_id = j.at("episode_id").get<std::string>();
    item.qtype = qtype_from_name(j.at("qtype").get<std::string>());
    item.prompt = j.at("prompt").get<std::string>();
    item.answer = j.at("answer").get<std::string>();
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad question record: ") + ex.what());
  }
  item.meta = j.value("meta", json::object());
  return item;
}

std::vector<QAItem> read_qa_file(const std::string& path) {
  std::vector<QAItem> out;
  for (const auto& [line_no, line] : read_jsonl_lines(path)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON", line_no, 0);
    try {
      out.push_back(qa_from_json(j));
    } catch (const DataError& ex) {
      throw ParseError(ex.what(), line_no, 0);
    }
  }
  return out;
}

void write_qa_file(const std::string& path, const std::vector<QAItem>& items) {
  std::ostringstream ss;
  for (const auto& item : items) ss << qa_to_json(item).dump() << '\n';
  write_file(path, ss.str());
}

QuestionTemplates templates_from_json(const json& j) {
  QuestionTemplates t;
  std::map<std::string, std::string*> slots = {
      {"object_yes_no", &t.object_yes_no},
      {"object_either_or", &t.object_either_or},
      {"action_yes_no", &t.action_yes_no},
      {"action_either_or", &t.action_either_or},
      {"temporal_before", &t.temporal_before},
      {"temporal_after", &t.temporal_after},
      {"before_after_pair", &t.before_after_pair},
      {"short_summary", &t.short_summary},
      {"long_summary", &t.long_summary},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = slots.find(key);
    if (it == slots.end()) throw DataError("unknown question template: '" + key + "'");
    *it->second = value.get<std::string>();
  }
  return t;
}

bool GenPolicy::type_enabled(QType t) const {
  if (t == QType::ood_ordinary || t == QType::ood_extraordinary) return false;
  if (t == QType::before_after_pair && !enable_before_after_pairs) return false;
  return enabled_types.empty() || enabled_types.count(t) > 0;
}

namespace {

std::string fill(const std::string& tmpl, const std::vector<std::string>& args) {
  std::string out;
  std::size_t pos = 0, used = 0;
  while (true) {
    std::size_t slot = tmpl.find("{}", pos);
    if (slot == std::string::npos) break;
    if (used >= args.size()) throw DataError("template '" + tmpl + "' has too many slots");
    out.append(tmpl, pos, slot - pos);
    out += args[used++];
    pos = slot + 2;
  }
  out.append(tmpl, pos, std::string::npos);
  if (used != args.size()) throw DataError("template '" + tmpl + "' has too few slots");
  return out;
}

Rng item_rng(std::uint64_t base, const std::string& episode_id, QType t) {
  return Rng(seed_combine(seed_combine(base, fnv1a64(episode_id)), fnv1a64(qtype_name(t))));
}

// Everything a per-episode sampler needs, precomputed once. The negative
// supports exclude zero weights so pick_weighted always has positive mass.
struct Ctx {
  const EpisodeTrace& e;
  const GenPolicy& policy;
  const Lexicon& lex;
  const CorpusStats* stats = nullptr;
  const DescriptionPool* pool = nullptr;

  std::vector<std::string> visible;  // sorted distinct symbols
  std::vector<std::string> unseen;   // negative-object support
  std::vector<double> unseen_w;
  std::vector<std::string> rendered;  // per plan step
  std::vector<std::size_t> unique_steps;  // rendering occurs exactly once
  std::vector<ActionId> neg_actions;  // negative-action support
  std::vector<double> neg_action_w;
  std::vector<ActionId> complex_neg;  // negative actions with harvested descriptions
  std::vector<double> complex_neg_w;

  Ctx(const EpisodeTrace& ep, const GenPolicy& pol, const Lexicon& lx,
      const CorpusStats* st = nullptr, const DescriptionPool* pl = nullptr)
      : e(ep), policy(pol), lex(lx), stats(st), pool(pl) {
    std::set<std::string> vis = e.visible_union();
    visible.assign(vis.begin(), vis.end());

    rendered.reserve(e.plan.size());
    for (const auto& s : e.plan) rendered.push_back(render_step(s, lex));
    std::map<std::string, int> phrase_count;
    for (const auto& r : rendered) phrase_count[r]++;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
      if (phrase_count[rendered[i]] == 1) unique_steps.push_back(i);
    }

    if (!stats) return;
    const auto& obj_freq = policy.negative_weighting == GenPolicy::NegWeighting::step
                               ? stats->object_step_visibility_freq
                               : stats->object_visibility_freq;
    for (const auto& [sym, count] : obj_freq) {
      if (count > 0 && !vis.count(sym) && lex.objects.count(sym)) {
        unseen.push_back(sym);
        unseen_w.push_back(static_cast<double>(count));
      }
    }

    std::set<ActionId> performed;
    for (const auto& s : e.plan) performed.insert({s.verb, s.args.at(0)});
    for (const auto& [action, count] : stats->action_freq) {
      if (count <= 0 || performed.count(action)) continue;
      auto phrase = stats->action_phrase.find(action);
      if (phrase == stats->action_phrase.end()) continue;
      neg_actions.push_back(action);
      neg_action_w.push_back(static_cast<double>(count));
      if (pool) {
        auto entries = pool->by_action.find(action);
        if (entries != pool->by_action.end() && !entries->second.empty()) {
          complex_neg.push_back(action);
          complex_neg_w.push_back(static_cast<double>(count));
        }
      }
    }
  }

  QAItem base_item(QType t) const {
    QAItem item;
    item.episode_id = e.episode_id;
    item.qtype = t;
    item.meta = json::object();
    return item;
  }

  std::optional<QAItem> object_yes(Rng& rng) const {
    if (visible.empty()) return std::nullopt;
    const std::string& sym = visible[rng.below(visible.size())];
    QAItem item = base_item(QType::object_yes_no);
    item.prompt = fill(policy.templates.object_yes_no,
                       {with_indefinite_article(lex.object_phrase(sym))});
    item.answer = "yes";
    item.meta["object"] = sym;
    return item;
  }

  std::optional<QAItem> object_no(Rng& rng) const {
    if (unseen.empty()) return std::nullopt;
    const std::string& sym = unseen[rng.pick_weighted(unseen_w)];
    QAItem item = base_item(QType::object_yes_no);
    item.prompt = fill(policy.templates.object_yes_no,
                       {with_indefinite_article(lex.object_phrase(sym))});
    item.answer = "no";
    item.meta["object"] = sym;
    return item;
  }

  std::optional<QAItem> object_either(Rng& rng) const {
    if (visible.empty() || unseen.empty()) return std::nullopt;
    const std::string& seen = visible[rng.below(visible.size())];
    const std::string& distractor = unseen[rng.pick_weighted(unseen_w)];
    std::string a = with_indefinite_article(lex.object_phrase(seen));
    std::string b = with_indefinite_article(lex.object_phrase(distractor));
    bool seen_first = rng.coin();
    QAItem item = base_item(QType::object_either_or);
    item.prompt = fill(policy.templates.object_either_or,
                       seen_first ? std::vector<std::string>{a, b}
                                  : std::vector<std::string>{b, a});
    item.answer = lex.object_phrase(seen);
    item.meta["seen"] = seen;
    item.meta["distractor"] = distractor;
    return item;
  }

  std::optional<QAItem> action_yes(QType t, Rng& rng) const {
    if (e.plan.empty()) return std::nullopt;
    std::size_t i = rng.below(e.plan.size());
    QAItem item = base_item(t);
    const std::string& body =
        t == QType::action_complex_yes_no ? e.step_descriptions[i] : rendered[i];
    item.prompt = fill(policy.templates.action_yes_no, {body});
    item.answer = "yes";
    item.meta["step"] = i;
    return item;
  }

  std::optional<QAItem> action_simple_no(Rng& rng) const {
    if (neg_actions.empty()) return std::nullopt;
    const ActionId& action = neg_actions[rng.pick_weighted(neg_action_w)];
    QAItem item = base_item(QType::action_simple_yes_no);
    item.prompt = fill(policy.templates.action_yes_no, {stats->action_phrase.at(action)});
    item.answer = "no";
    item.meta["verb"] = verb_name(action.verb);
    item.meta["object"] = action.object;
    return item;
  }

  std::optional<QAItem> action_complex_no(Rng& rng) const {
    if (complex_neg.empty()) return std::nullopt;
    const ActionId& action = complex_neg[rng.pick_weighted(complex_neg_w)];
    const auto& entry_ids = pool->by_action.at(action);
    const auto& entry = pool->entries[entry_ids[rng.below(entry_ids.size())]];
    QAItem item = base_item(QType::action_complex_yes_no);
    item.prompt = fill(policy.templates.action_yes_no, {entry.description});
    item.answer = "no";
    item.meta["verb"] = verb_name(action.verb);
    item.meta["object"] = action.object;
    item.meta["source_episode"] = entry.episode_id;
    return item;
  }

  std::optional<QAItem> action_either(Rng& rng) const {
    if (e.plan.empty() || neg_actions.empty()) return std::nullopt;
    std::size_t i = rng.below(e.plan.size());
    const ActionId& action = neg_actions[rng.pick_weighted(neg_action_w)];
    const std::string& performed_phrase = rendered[i];
    const std::string& other_phrase = stats->action_phrase.at(action);
    bool performed_first = rng.coin();
    QAItem item = base_item(QType::action_either_or);
    item.prompt = fill(policy.templates.action_either_or,
                       performed_first
                           ? std::vector<std::string>{performed_phrase, other_phrase}
                           : std::vector<std::string>{other_phrase, performed_phrase});
    item.answer = performed_phrase;
    item.meta["step"] = i;
    item.meta["distractor_verb"] = verb_name(action.verb);
    item.meta["distractor_object"] = action.object;
    return item;
  }

  std::vector<std::size_t> temporal_anchors(bool before) const {
    std::vector<std::size_t> anchors;
    for (std::size_t i : unique_steps) {
      if (before ? i > 0 : i + 1 < e.plan.size()) anchors.push_back(i);
    }
    return anchors;
  }

  QAItem temporal_at(QType t, std::size_t anchor) const {
    bool before = t == QType::temporal_before_simple || t == QType::temporal_before_complex;
    bool complex = t == QType::temporal_before_complex || t == QType::temporal_after_complex;
    QAItem item = base_item(t);
    const std::string& tmpl =
        before ? policy.templates.temporal_before : policy.templates.temporal_after;
    item.prompt = fill(tmpl, {complex ? e.step_descriptions[anchor] : rendered[anchor]});
    item.answer = rendered[before ? anchor - 1 : anchor + 1];
    item.meta["anchor_step"] = anchor;
    return item;
  }

  std::optional<QAItem> temporal(QType t, Rng& rng) const {
    bool before = t == QType::temporal_before_simple || t == QType::temporal_before_complex;
    std::vector<std::size_t> anchors = temporal_anchors(before);
    if (anchors.empty()) return std::nullopt;
    return temporal_at(t, anchors[rng.below(anchors.size())]);
  }

  std::optional<QAItem> pair_item(Rng& rng, bool want_yes) const {
    if (unique_steps.size() < 2) return std::nullopt;
    std::vector<std::size_t> two = rng.subset(unique_steps.size(), 2);
    std::size_t earlier = unique_steps[two[0]];
    std::size_t later = unique_steps[two[1]];
    QAItem item = base_item(QType::before_after_pair);
    item.prompt = fill(policy.templates.before_after_pair,
                       want_yes ? std::vector<std::string>{rendered[earlier], rendered[later]}
                                : std::vector<std::string>{rendered[later], rendered[earlier]});
    item.answer = want_yes ? "yes" : "no";
    item.meta["first_step"] = want_yes ? earlier : later;
    item.meta["second_step"] = want_yes ? later : earlier;
    return item;
  }
};

void assign_ids(std::vector<QAItem>& items) {
  for (std::size_t k = 0; k < items.size(); ++k) {
    items[k].qa_id =
        items[k].episode_id + "#" + qtype_name(items[k].qtype) + "#" + std::to_string(k);
  }
}

// Yes-list and no-list into one balanced output: equal counts, one extra yes
// allowed when the cap is odd, all of one side when the other has no supply.
std::vector<QAItem> balance(std::vector<QAItem> yes, std::vector<QAItem> no, int cap,
                            bool no_supply_existed) {
  std::vector<QAItem> out;
  if (!no_supply_existed || no.empty()) {
    out = std::move(yes);
  } else if (yes.empty()) {
    out = std::move(no);
  } else {
    std::size_t n = std::min(yes.size(), no.size());
    std::size_t extra = (cap % 2 == 1 && yes.size() > n) ? 1 : 0;
    for (std::size_t k = 0; k < n + extra; ++k) {
      out.push_back(std::move(yes[k]));
      if (k < n) out.push_back(std::move(no[k]));
    }
  }
  assign_ids(out);
  return out;
}

// Up to `want` draws without replacement, proportional to the given weights.
std::vector<std::size_t> weighted_distinct(Rng& rng, std::vector<double> w, std::size_t want) {
  std::vector<std::size_t> index(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) index[i] = i;
  std::vector<std::size_t> out;
  while (out.size() < want && !w.empty()) {
    std::size_t j = rng.pick_weighted(w);
    out.push_back(index[j]);
    w[j] = w.back();
    index[j] = index.back();
    w.pop_back();
    index.pop_back();
  }
  return out;
}

}  // namespace

DescriptionPool DescriptionPool::build(const std::vector<EpisodeTrace>& corpus) {
  DescriptionPool pool;
  for (const auto& e : corpus) {
    for (std::size_t i = 0; i < e.plan.size(); ++i) {
      ActionId action{e.plan[i].verb, e.plan[i].args.at(0)};
      pool.by_action[action].push_back(pool.entries.size());
      pool.entries.push_back({e.episode_id, action, e.step_descriptions[i]});
    }
  }
  return pool;
}

std::vector<QAItem> gen_object_questions(QType kind, const EpisodeTrace& e, const CorpusStats& stats,
                                         const GenPolicy& policy, const Lexicon& lex,
                                         GenNotes* notes) {
  if (policy.per_type_cap < 1) throw UsageError("per-type cap must be >= 1");
  Ctx ctx(e, policy, lex, &stats);
  Rng rng = item_rng(policy.seed, e.episode_id, kind);
  int cap = policy.per_type_cap;

  if (kind == QType::object_yes_no) {
    std::size_t want_yes = static_cast<std::size_t>((cap + 1) / 2);
    std::size_t want_no = static_cast<std::size_t>(cap / 2);

    std::vector<std::string> pos = ctx.visible;
    rng.shuffle(pos);
    std::vector<QAItem> yes;
    for (std::size_t k = 0; k < pos.size() && yes.size() < want_yes; ++k) {
      QAItem item = ctx.base_item(kind);
      item.prompt = fill(policy.templates.object_yes_no,
                         {with_indefinite_article(lex.object_phrase(pos[k]))});
      item.answer = "yes";
      item.meta["object"] = pos[k];
      yes.push_back(std::move(item));
    }

    std::vector<QAItem> no;
    for (std::size_t j : weighted_distinct(rng, ctx.unseen_w, want_no)) {
      QAItem item = ctx.base_item(kind);
      item.prompt = fill(policy.templates.object_yes_no,
                         {with_indefinite_article(lex.object_phrase(ctx.unseen[j]))});
      item.answer = "no";
      item.meta["object"] = ctx.unseen[j];
      no.push_back(std::move(item));
    }
    if (ctx.unseen.empty() && notes) notes->zero_negative_object_episodes++;
    return balance(std::move(yes), std::move(no), cap, !ctx.unseen.empty());
  }

  if (kind != QType::object_either_or) throw UsageError("not an object question type");
  std::vector<QAItem> out;
  std::set<std::string> prompts;
  for (int attempt = 0; attempt < cap * 30 && out.size() < static_cast<std::size_t>(cap);
       ++attempt) {
    auto item = ctx.object_either(rng);
    if (!item) break;
    if (prompts.insert(item->prompt).second) out.push_back(std::move(*item));
  }
  assign_ids(out);
  return out;
}

std::vector<QAItem> gen_action_questions(QType kind, const EpisodeTrace& e, const CorpusStats& stats,
                                         const GenPolicy& policy, const Lexicon& lex,
                                         const DescriptionPool* pool, GenNotes* notes) {
  if (policy.per_type_cap < 1) throw UsageError("per-type cap must be >= 1");
  Ctx ctx(e, policy, lex, &stats, pool);
  Rng rng = item_rng(policy.seed, e.episode_id, kind);
  int cap = policy.per_type_cap;

  if (kind == QType::action_simple_yes_no || kind == QType::action_complex_yes_no) {
    bool complex = kind == QType::action_complex_yes_no;
    std::size_t want_yes = static_cast<std::size_t>((cap + 1) / 2);
    std::size_t want_no = static_cast<std::size_t>(cap / 2);

    std::vector<std::size_t> steps(e.plan.size());
    for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = i;
    rng.shuffle(steps);
    std::vector<QAItem> yes;
    std::set<std::string> prompts;
    for (std::size_t i : steps) {
      if (yes.size() >= want_yes) break;
      QAItem item = ctx.base_item(kind);
      item.prompt = fill(policy.templates.action_yes_no,
                         {complex ? e.step_descriptions[i] : ctx.rendered[i]});
      item.answer = "yes";
      item.meta["step"] = i;
      if (prompts.insert(item.prompt).second) yes.push_back(std::move(item));
    }

    const auto& support = complex ? ctx.complex_neg : ctx.neg_actions;
    const auto& support_w = complex ? ctx.complex_neg_w : ctx.neg_action_w;
    std::vector<QAItem> no;
    for (std::size_t j : weighted_distinct(rng, support_w, want_no)) {
      const ActionId& action = support[j];
      QAItem item = ctx.base_item(kind);
      std::string body;
      if (complex) {
        const auto& entry_ids = pool->by_action.at(action);
        const auto& entry = pool->entries[entry_ids[rng.below(entry_ids.size())]];
        body = entry.description;
        item.meta["source_episode"] = entry.episode_id;
      } else {
        body = stats.action_phrase.at(action);
      }
      item.prompt = fill(policy.templates.action_yes_no, {body});
      item.answer = "no";
      item.meta["verb"] = verb_name(action.verb);
      item.meta["object"] = action.object;
      if (prompts.insert(item.prompt).second) no.push_back(std::move(item));
    }
    if (notes && support.empty()) {
      if (complex) notes->complex_negative_shortfalls++;
      else notes->zero_negative_action_episodes++;
    }
    return balance(std::move(yes), std::move(no), cap, !support.empty());
  }

  if (kind != QType::action_either_or) throw UsageError("not an action question type");
  std::vector<QAItem> out;
  std::set<std::string> prompts;
  for (int attempt = 0; attempt < cap * 30 && out.size() < static_cast<std::size_t>(cap);
       ++attempt) {
    auto item = ctx.action_either(rng);
    if (!item) break;
    if (prompts.insert(item->prompt).second) out.push_back(std::move(*item));
  }
  assign_ids(out);
  return out;
}

std::vector<QAItem> gen_temporal_questions(QType kind, const EpisodeTrace& e,
                                           const GenPolicy& policy, const Lexicon& lex) {
  if (!is_temporal(kind)) throw UsageError("not a temporal question type");
  if (policy.per_type_cap < 1) throw UsageError("per-type cap must be >= 1");
  Ctx ctx(e, policy, lex);
  Rng rng = item_rng(policy.seed, e.episode_id, kind);
  bool before = kind == QType::temporal_before_simple || kind == QType::temporal_before_complex;

  std::vector<std::size_t> anchors = ctx.temporal_anchors(before);
  rng.shuffle(anchors);
  if (anchors.size() > static_cast<std::size_t>(policy.per_type_cap)) {
    anchors.resize(static_cast<std::size_t>(policy.per_type_cap));
  }
  std::vector<QAItem> out;
  for (std::size_t anchor : anchors) out.push_back(ctx.temporal_at(kind, anchor));
  assign_ids(out);
  return out;
}

std::vector<QAItem> gen_before_after_pairs(const EpisodeTrace& e, const GenPolicy& policy,
                                           const Lexicon& lex) {
  if (policy.per_type_cap < 1) throw UsageError("per-type cap must be >= 1");
  Ctx ctx(e, policy, lex);
  Rng rng = item_rng(policy.seed, e.episode_id, QType::before_after_pair);
  int cap = policy.per_type_cap;
  std::size_t want_yes = static_cast<std::size_t>((cap + 1) / 2);
  std::size_t want_no = static_cast<std::size_t>(cap / 2);

  std::vector<QAItem> yes, no;
  std::set<std::string> prompts;
  for (int attempt = 0; attempt < cap * 30 && yes.size() < want_yes; ++attempt) {
    auto item = ctx.pair_item(rng, true);
    if (!item) break;
    if (prompts.insert(item->prompt).second) yes.push_back(std::move(*item));
  }
  for (int attempt = 0; attempt < cap * 30 && no.size() < want_no; ++attempt) {
    auto item = ctx.pair_item(rng, false);
    if (!item) break;
    if (prompts.insert(item->prompt).second) no.push_back(std::move(*item));
  }
  return balance(std::move(yes), std::move(no), cap, ctx.unique_steps.size() >= 2);
}

std::vector<QAItem> gen_summary_prompts(const EpisodeTrace& e, const GenPolicy& policy,
                                        const Lexicon& lex) {
  std::vector<QAItem> out;
  {
    QAItem item;
    item.episode_id = e.episode_id;
    item.qtype = QType::short_summary;
    item.prompt = policy.templates.short_summary;
    item.answer = normalize_answer(e.short_summary);
    item.meta = json::object();
    out.push_back(std::move(item));
  }
  {
    QAItem item;
    item.episode_id = e.episode_id;
    item.qtype = QType::long_summary;
    item.prompt = policy.templates.long_summary;
    item.answer = normalize_answer(render_long_summary(e.plan, lex));
    item.meta = json::object();
    out.push_back(std::move(item));
  }
  assign_ids(out);
  return out;
}

StaticDataset build_static_dataset(const std::vector<EpisodeTrace>& corpus, const CorpusStats& stats,
                                   const GenPolicy& policy, const Lexicon& lex, int workers) {
  DescriptionPool pool = DescriptionPool::build(corpus);

  std::vector<std::vector<QAItem>> per_episode(corpus.size());
  std::vector<GenNotes> per_notes(corpus.size());
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    const EpisodeTrace& e = corpus[i];
    GenNotes* notes = &per_notes[i];
    std::vector<QAItem>& items = per_episode[i];
    auto take = [&items](std::vector<QAItem> v) {
      for (auto& item : v) items.push_back(std::move(item));
    };
    for (QType t : kQuestionTypes) {
      if (!policy.type_enabled(t)) continue;
      switch (t) {
        case QType::object_yes_no:
        case QType::object_either_or:
          take(gen_object_questions(t, e, stats, policy, lex, notes));
          break;
        case QType::action_simple_yes_no:
        case QType::action_complex_yes_no:
        case QType::action_either_or:
          take(gen_action_questions(t, e, stats, policy, lex, &pool, notes));
          break;
        default:
          take(gen_temporal_questions(t, e, policy, lex));
          break;
      }
    }
    if (policy.type_enabled(QType::before_after_pair)) {
      take(gen_before_after_pairs(e, policy, lex));
    }
    std::vector<QAItem> summaries = gen_summary_prompts(e, policy, lex);
    for (auto& item : summaries) {
      if (policy.type_enabled(item.qtype)) items.push_back(std::move(item));
    }
  });

  StaticDataset ds;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < per_episode.size(); ++i) {
    ds.notes.zero_negative_object_episodes += per_notes[i].zero_negative_object_episodes;
    ds.notes.zero_negative_action_episodes += per_notes[i].zero_negative_action_episodes;
    ds.notes.complex_negative_shortfalls += per_notes[i].complex_negative_shortfalls;
    for (auto& item : per_episode[i]) {
      if (!seen.insert({item.episode_id, item.prompt}).second) {
        ds.notes.deduplicated_items++;
        continue;
      }
      ds.items.push_back(std::move(item));
    }
  }

  std::map<std::string, Split> split_of;
  for (const auto& e : corpus) split_of[e.episode_id] = e.split;
  std::map<std::string, std::int64_t> type_counts;
  std::map<std::string, std::int64_t> yes_counts, no_counts;
  std::map<std::string, std::map<std::string, std::int64_t>> per_split_counts;
  for (const auto& item : ds.items) {
    type_counts[qtype_name(item.qtype)]++;
    per_split_counts[split_name(split_of.at(item.episode_id))][qtype_name(item.qtype)]++;
    if (is_yes_no(item.qtype)) {
      (item.answer == "yes" ? yes_counts : no_counts)[qtype_name(item.qtype)]++;
    }
  }
  ds.manifest = json{{"format_version", kFormatVersion},
                     {"tool_version", kToolVersion},
                     {"kind", "qa_dataset"},
                     {"n_items", ds.items.size()},
                     {"n_episodes", corpus.size()},
                     {"per_type_cap", policy.per_type_cap},
                     {"seed", policy.seed},
                     {"negative_weighting",
                      policy.negative_weighting == GenPolicy::NegWeighting::step ? "step"
                                                                                 : "episode"},
                     {"before_after_pairs", policy.enable_before_after_pairs},
                     {"type_counts", type_counts},
                     {"per_split_type_counts", per_split_counts},
                     {"yes_counts", yes_counts},
                     {"no_counts", no_counts},
                     {"notes",
                      {{"zero_negative_object_episodes", ds.notes.zero_negative_object_episodes},
                       {"zero_negative_action_episodes", ds.notes.zero_negative_action_episodes},
                       {"complex_negative_shortfalls", ds.notes.complex_negative_shortfalls},
                       {"deduplicated_items", ds.notes.deduplicated_items}}}};
  return ds;
}

std::vector<EpochEntry> epoch_stream(const std::vector<EpisodeTrace>& corpus, const CorpusStats& stats,
                                     const GenPolicy& policy, std::uint64_t epoch_seed,
                                     const Lexicon& lex) {
  GenPolicy epoch_policy = policy;
  epoch_policy.seed = seed_combine(policy.seed, epoch_seed);
  DescriptionPool pool = DescriptionPool::build(corpus);

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng order_rng(seed_combine(epoch_policy.seed, fnv1a64("epoch_order")));
  order_rng.shuffle(order);

  std::vector<EpochEntry> out;
  out.reserve(order.size());
  for (std::size_t idx : order) {
    const EpisodeTrace& e = corpus[idx];
    Ctx ctx(e, epoch_policy, lex, &stats, &pool);
    EpochEntry entry{idx, {}};

    auto add = [&](std::optional<QAItem> item, QType t) {
      if (!item) return;
      item->qa_id = e.episode_id + "#" + std::string(qtype_name(t)) + "#e";
      entry.items.push_back(std::move(*item));
    };

    for (QType t : kQuestionTypes) {
      if (!epoch_policy.type_enabled(t)) continue;
      Rng rng = item_rng(epoch_policy.seed, e.episode_id, t);
      switch (t) {
        case QType::object_yes_no: {
          bool want_yes = rng.coin();
          auto item = want_yes ? ctx.object_yes(rng) : ctx.object_no(rng);
          if (!item) item = want_yes ? ctx.object_no(rng) : ctx.object_yes(rng);
          add(std::move(item), t);
          break;
        }
        case QType::object_either_or:
          add(ctx.object_either(rng), t);
          break;
        case QType::action_simple_yes_no: {
          bool want_yes = rng.coin();
          auto item = want_yes ? ctx.action_yes(t, rng) : ctx.action_simple_no(rng);
          if (!item) item = want_yes ? ctx.action_simple_no(rng) : ctx.action_yes(t, rng);
          add(std::move(item), t);
          break;
        }
        case QType::action_complex_yes_no: {
          bool want_yes = rng.coin();
          auto item = want_yes ? ctx.action_yes(t, rng) : ctx.action_complex_no(rng);
          if (!item) item = want_yes ? ctx.action_complex_no(rng) : ctx.action_yes(t, rng);
          add(std::move(item), t);
          break;
        }
        case QType::action_either_or:
          add(ctx.action_either(rng), t);
          break;
        default:
          add(ctx.temporal(t, rng), t);
          break;
      }
    }
    if (epoch_policy.type_enabled(QType::before_after_pair)) {
      Rng rng = item_rng(epoch_policy.seed, e.episode_id, QType::before_after_pair);
      add(ctx.pair_item(rng, rng.coin()), QType::before_after_pair);
    }
    for (auto& item : gen_summary_prompts(e, epoch_policy, lex)) {
      if (!epoch_policy.type_enabled(item.qtype)) continue;
      item.qa_id = e.episode_id + "#" + std::string(qtype_name(item.qtype)) + "#e";
      entry.items.push_back(std::move(item));
    }
    out.push_back(std::move(entry));
  }
  return out;
}

OodBank default_ood_bank() {
  OodBank bank;
  bank.ordinary = {
      "did you clean the attic?",
      "did you move the toys?",
      "did you do the laundry?",
      "did you water the plants?",
      "did you take out the garbage?",
      "did you vacuum the carpet?",
      "did you mop the hallway?",
      "did you dust the blinds?",
      "did you fold the towels?",
      "did you iron the shirts?",
      "did you make the beds upstairs?",
      "did you feed the cat?",
      "did you walk the dog?",
      "did you wash the windows?",
      "did you sweep the porch?",
      "did you rake the leaves?",
      "did you mow the lawn?",
      "did you shovel the driveway?",
      "did you change the sheets?",
      "did you scrub the bathtub?",
      "did you polish the silverware?",
      "did you organize the closet?",
      "did you empty the dishwasher?",
      "did you defrost the freezer?",
      "did you descale the faucet?",
      "did you fix the leaky tap?",
      "did you replace the light bulbs?",
      "did you hang the curtains?",
      "did you paint the fence?",
      "did you unclog the drain?",
      "did you tidy the garage?",
      "did you sort the recycling?",
      "did you weed the garden?",
      "did you trim the hedges?",
      "did you bathe the baby?",
      "did you set the dinner table?",
      "did you brew some tea?",
      "did you bake the cookies?",
      "did you stir the soup?",
      "did you peel the carrots?",
      "did you grate the cheese?",
      "did you knead the dough?",
      "did you marinate the chicken?",
      "did you refill the salt shaker?",
      "did you restock the pantry?",
      "did you air out the bedroom?",
      "did you flip the mattress?",
      "did you wind the grandfather clock?",
      "did you label the spice jars?",
      "did you alphabetize the bookshelf?",
  };
  bank.extraordinary = {
      "did you swim to the coral reef?",
      "did you learn german?",
      "did you fall in love?",
      "did you kayak in the fjord?",
      "did you graduate from college?",
      "did you climb mount everest?",
      "did you win the lottery?",
      "did you fly to the moon?",
      "did you run a marathon?",
      "did you write a novel?",
      "did you discover a comet?",
      "did you sail across the atlantic?",
      "did you ride a camel?",
      "did you meet the president?",
      "did you join the circus?",
      "did you invent a time machine?",
      "did you dig for dinosaur bones?",
      "did you surf a tidal wave?",
      "did you tame a lion?",
      "did you compose a symphony?",
      "did you translate ancient hieroglyphs?",
      "did you wrestle an alligator?",
      "did you hike the entire appalachian trail?",
      "did you perform brain surgery?",
      "did you broker a peace treaty?",
      "did you breed racing pigeons?",
      "did you forge a samurai sword?",
      "did you pilot a submarine?",
      "did you charm a cobra?",
      "did you excavate a roman villa?",
      "did you referee a boxing match?",
      "did you choreograph a ballet?",
      "did you summit k2 without oxygen?",
      "did you decode an enemy cipher?",
      "did you audition for the opera?",
      "did you prospect for gold?",
      "did you lasso a wild horse?",
      "did you deliver a commencement speech?",
      "did you spelunk an unexplored cave?",
      "did you barnstorm in a biplane?",
      "did you negotiate a hostage release?",
      "did you cultivate a bonsai forest?",
      "did you commandeer a pirate ship?",
      "did you mediate a border dispute?",
      "did you chase a tornado?",
      "did you befriend a dolphin?",
      "did you memorize a thousand digits of pi?",
      "did you outrun an avalanche?",
      "did you judge a chili cookoff?",
      "did you circumnavigate the globe?",
  };
  return bank;
}

OodBank ood_bank_from_json(const json& j) {
  OodBank bank;
  try {
    bank.ordinary = j.at("ordinary").get<std::vector<std::string>>();
    bank.extraordinary = j.at("extraordinary").get<std::vector<std::string>>();
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad question bank: ") + ex.what());
  }
  return bank;
}

std::pair<std::vector<QAItem>, std::vector<QAItem>> gen_ood_sets(const OodBank& bank,
                                                                 const Lexicon& lex) {
  auto make_set = [&lex](const std::vector<std::string>& questions, QType t) {
    if (questions.size() < 50) {
      throw DataError(std::string("bank for ") + qtype_name(t) + " has " +
                      std::to_string(questions.size()) + " questions, need at least 50");
    }
    std::vector<std::string> verb_phrases;
    for (const auto& [name, phrase] : lex.verbs) verb_phrases.push_back(phrase);

    std::vector<QAItem> out;
    for (std::size_t k = 0; k < 50; ++k) {
      const std::string& q = questions[k];
      std::vector<std::string> toks = split_tokens(normalize_answer(q));
      bool has_verb = false, has_object = false;
      for (const auto& phrase : verb_phrases) {
        if (contains_token_run(toks, split_tokens(phrase))) has_verb = true;
      }
      for (const auto& [sym, phrase] : lex.objects) {
        if (contains_token_run(toks, split_tokens(phrase))) has_object = true;
      }
      if (has_verb && has_object) {
        throw DataError("contaminated question (names a known action): '" + q + "'");
      }
      QAItem item;
      item.episode_id = t == QType::ood_ordinary ? "ood-ordinary" : "ood-extraordinary";
      item.qtype = t;
      item.prompt = q;
      item.answer = "no";
      item.meta = json::object();
      out.push_back(std::move(item));
    }
    assign_ids(out);
    return out;
  };
  return {make_set(bank.ordinary, QType::ood_ordinary),
          make_set(bank.extraordinary, QType::ood_extraordinary)};
}

}  // namespace traceqa
