#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "support/test_support.hpp"
#include "traceqa/errors.hpp"
#include "traceqa/qa.hpp"
#include "traceqa/simulator.hpp"
#include "traceqa/util.hpp"

using namespace traceqa;

namespace {

struct Fixture {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus;
  CorpusStats stats;
  DescriptionPool pool;

  Fixture() {
    SimConfig cfg;
    cfg.n_train = 30;
    cfg.seed = 1;
    CorpusBundle bundle = generate_corpus(default_catalog(), cfg, lex);
    corpus = std::move(bundle.episodes);
    stats = std::move(bundle.stats);
    pool = DescriptionPool::build(corpus);
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

GenPolicy policy_with(std::uint64_t seed, int cap = 10) {
  GenPolicy p;
  p.seed = seed;
  p.per_type_cap = cap;
  return p;
}

int count_answer(const std::vector<QAItem>& items, const std::string& ans) {
  return static_cast<int>(
      std::count_if(items.begin(), items.end(), [&](const QAItem& q) { return q.answer == ans; }));
}

// Options of an either/or prompt built from the default templates.
std::pair<std::string, std::string> parse_options(const std::string& prompt,
                                                  const std::string& prefix) {
  REQUIRE(prompt.rfind(prefix, 0) == 0);
  REQUIRE(prompt.back() == '?');
  std::string body = prompt.substr(prefix.size(), prompt.size() - prefix.size() - 1);
  std::size_t sep = body.find(" or ");
  REQUIRE(sep != std::string::npos);
  return {body.substr(0, sep), body.substr(sep + 4)};
}

std::string strip_article(const std::string& s) {
  if (s.rfind("an ", 0) == 0) return s.substr(3);
  if (s.rfind("a ", 0) == 0) return s.substr(2);
  return s;
}

}  // namespace

TEST_CASE("qtype names round-trip for all fourteen types") {
  for (QType t : {QType::object_yes_no, QType::object_either_or, QType::action_simple_yes_no,
                  QType::action_complex_yes_no, QType::action_either_or,
                  QType::temporal_before_simple, QType::temporal_before_complex,
                  QType::temporal_after_simple, QType::temporal_after_complex,
                  QType::short_summary, QType::long_summary, QType::before_after_pair,
                  QType::ood_ordinary, QType::ood_extraordinary}) {
    CHECK(qtype_from_name(qtype_name(t)) == t);
  }
  CHECK_THROWS_AS(qtype_from_name("essay"), DataError);
  CHECK(kQuestionTypes.size() == 9);
  CHECK(kSummaryTypes.size() == 2);
}

TEST_CASE("object yes/no items are balanced, grounded, and deterministic") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(7);
  for (const auto& e : f.corpus) {
    auto items = gen_object_questions(QType::object_yes_no, e, f.stats, policy, f.lex);
    auto again = gen_object_questions(QType::object_yes_no, e, f.stats, policy, f.lex);
    REQUIRE(items.size() == again.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      CHECK(qa_to_json(items[i]) == qa_to_json(again[i]));
    }

    CHECK(items.size() <= 10);
    int yes = count_answer(items, "yes"), no = count_answer(items, "no");
    CHECK(yes + no == static_cast<int>(items.size()));
    CHECK(std::abs(yes - no) <= 1);

    std::set<std::string> vis = e.visible_union();
    for (const auto& q : items) {
      std::string sym = q.meta.at("object").get<std::string>();
      CHECK(q.prompt ==
            "was there " + with_indefinite_article(f.lex.object_phrase(sym)) + "?");
      if (q.answer == "yes") {
        CHECK(vis.count(sym) == 1);
      } else {
        CHECK(vis.count(sym) == 0);
        CHECK(f.stats.object_visibility_freq.at(sym) > 0);
      }
    }
  }

  // A different seed reshuffles at least one episode's items.
  GenPolicy other = policy_with(8);
  bool any_diff = false;
  for (const auto& e : f.corpus) {
    auto a = gen_object_questions(QType::object_yes_no, e, f.stats, policy, f.lex);
    auto b = gen_object_questions(QType::object_yes_no, e, f.stats, other, f.lex);
    if (a.size() != b.size()) { any_diff = true; break; }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].prompt != b[i].prompt) { any_diff = true; break; }
    }
    if (any_diff) break;
  }
  CHECK(any_diff);
}

TEST_CASE("object either/or options have exactly one consistent choice") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(3);
  for (const auto& e : f.corpus) {
    auto items = gen_object_questions(QType::object_either_or, e, f.stats, policy, f.lex);
    CHECK(items.size() <= 10);
    std::set<std::string> vis = e.visible_union();
    std::set<std::string> prompts;
    for (const auto& q : items) {
      CHECK(prompts.insert(q.prompt).second);  // deduplicated
      auto [left, right] = parse_options(q.prompt, "was there ");
      std::string lp = strip_article(left), rp = strip_article(right);
      auto ls = f.lex.symbol_for_phrase(lp), rs = f.lex.symbol_for_phrase(rp);
      REQUIRE(ls.has_value());
      REQUIRE(rs.has_value());
      bool lv = vis.count(*ls) > 0, rv = vis.count(*rs) > 0;
      CHECK(lv != rv);  // exactly one option is consistent with the episode
      CHECK(q.answer == (lv ? lp : rp));
      CHECK(q.meta.at("seen").get<std::string>() == (lv ? *ls : *rs));
      CHECK(q.meta.at("distractor").get<std::string>() == (lv ? *rs : *ls));
    }
  }
}

TEST_CASE("action yes/no prompts quote real or foreign steps correctly") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(5);
  std::map<std::string, const EpisodeTrace*> by_id;
  for (const auto& e : f.corpus) by_id[e.episode_id] = &e;

  for (const auto& e : f.corpus) {
    std::set<ActionId> performed;
    for (const auto& s : e.plan) performed.insert({s.verb, s.args.at(0)});

    for (QType t : {QType::action_simple_yes_no, QType::action_complex_yes_no}) {
      auto items = gen_action_questions(t, e, f.stats, policy, f.lex, &f.pool);
      int yes = count_answer(items, "yes"), no = count_answer(items, "no");
      CHECK(yes + no == static_cast<int>(items.size()));
      CHECK(std::abs(yes - no) <= 1);
      for (const auto& q : items) {
        REQUIRE(q.prompt.rfind("did you ", 0) == 0);
        std::string body = q.prompt.substr(8, q.prompt.size() - 9);
        if (q.answer == "yes") {
          std::size_t i = q.meta.at("step").get<std::size_t>();
          REQUIRE(i < e.plan.size());
          const std::string& expect = t == QType::action_complex_yes_no
                                          ? e.step_descriptions[i]
                                          : render_step(e.plan[i], f.lex);
          CHECK(body == expect);
        } else {
          auto verb = verb_from_name(q.meta.at("verb").get<std::string>());
          REQUIRE(verb.has_value());
          ActionId action{*verb, q.meta.at("object").get<std::string>()};
          CHECK(performed.count(action) == 0);
          if (t == QType::action_complex_yes_no) {
            // Body is a real description of that action in the source episode.
            const EpisodeTrace* src = by_id.at(q.meta.at("source_episode").get<std::string>());
            bool found = false;
            for (std::size_t i = 0; i < src->plan.size(); ++i) {
              if (src->plan[i].verb == action.verb && src->plan[i].args.at(0) == action.object &&
                  src->step_descriptions[i] == body) {
                found = true;
                break;
              }
            }
            CHECK(found);
          } else {
            CHECK(body == f.stats.action_phrase.at(action));
          }
        }
      }
    }
  }
}

TEST_CASE("action either/or pits a performed step against an unperformed action") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(4);
  for (const auto& e : f.corpus) {
    std::set<std::string> performed_phrases;
    for (const auto& s : e.plan) performed_phrases.insert(render_step(s, f.lex));
    std::set<ActionId> performed;
    for (const auto& s : e.plan) performed.insert({s.verb, s.args.at(0)});

    auto items = gen_action_questions(QType::action_either_or, e, f.stats, policy, f.lex, &f.pool);
    for (const auto& q : items) {
      auto [left, right] = parse_options(q.prompt, "did you ");
      bool lperf = performed_phrases.count(left) > 0;
      bool rperf = performed_phrases.count(right) > 0;
      CHECK(lperf != rperf);
      CHECK(q.answer == (lperf ? left : right));
      const std::string& other = lperf ? right : left;
      ActionId other_action = f.stats.rendering_action.at(other);
      CHECK(performed.count(other_action) == 0);
    }
  }
}

TEST_CASE("temporal anchors render uniquely and answers quote the neighbor") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(6);
  for (const auto& e : f.corpus) {
    std::vector<std::string> rendered;
    std::map<std::string, int> phrase_count;
    for (const auto& s : e.plan) {
      rendered.push_back(render_step(s, f.lex));
      phrase_count[rendered.back()]++;
    }

    for (QType t : {QType::temporal_before_simple, QType::temporal_before_complex,
                    QType::temporal_after_simple, QType::temporal_after_complex}) {
      bool before = t == QType::temporal_before_simple || t == QType::temporal_before_complex;
      bool complex = t == QType::temporal_before_complex || t == QType::temporal_after_complex;
      auto items = gen_temporal_questions(t, e, policy, f.lex);
      CHECK(items.size() <= 10);
      for (const auto& q : items) {
        std::size_t anchor = q.meta.at("anchor_step").get<std::size_t>();
        REQUIRE(anchor < e.plan.size());
        CHECK(phrase_count.at(rendered[anchor]) == 1);  // unique rendering
        std::string prefix = before ? "what did you do just before " : "what did you do just after ";
        const std::string& body = complex ? e.step_descriptions[anchor] : rendered[anchor];
        CHECK(q.prompt == prefix + body + "?");
        if (before) {
          REQUIRE(anchor > 0);
          CHECK(q.answer == rendered[anchor - 1]);
        } else {
          REQUIRE(anchor + 1 < e.plan.size());
          CHECK(q.answer == rendered[anchor + 1]);
        }
      }
    }
  }
}

TEST_CASE("before/after pairs order two unique steps") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(9);
  policy.enable_before_after_pairs = true;
  for (const auto& e : f.corpus) {
    std::vector<std::string> rendered;
    for (const auto& s : e.plan) rendered.push_back(render_step(s, f.lex));
    auto items = gen_before_after_pairs(e, policy, f.lex);
    int yes = count_answer(items, "yes"), no = count_answer(items, "no");
    CHECK(yes + no == static_cast<int>(items.size()));
    for (const auto& q : items) {
      std::size_t first = q.meta.at("first_step").get<std::size_t>();
      std::size_t second = q.meta.at("second_step").get<std::size_t>();
      CHECK(q.prompt ==
            "did you " + rendered[first] + " before " + rendered[second] + "?");
      CHECK((q.answer == "yes") == (first < second));
    }
  }
}

TEST_CASE("summary prompts are constant and answers normalized") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(0);
  for (const auto& e : f.corpus) {
    auto items = gen_summary_prompts(e, policy, f.lex);
    REQUIRE(items.size() == 2);
    CHECK(items[0].qtype == QType::short_summary);
    CHECK(items[0].prompt == "summarize what you did.");
    CHECK(items[0].answer == normalize_answer(e.short_summary));
    CHECK(items[1].qtype == QType::long_summary);
    CHECK(items[1].prompt == "narrate what you did.");
    CHECK(items[1].answer == normalize_answer(render_long_summary(e.plan, f.lex)));
  }
}

TEST_CASE("qa ids are dense per episode and type") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(7);
  const EpisodeTrace& e = f.corpus[0];
  auto items = gen_object_questions(QType::object_yes_no, e, f.stats, policy, f.lex);
  for (std::size_t k = 0; k < items.size(); ++k) {
    CHECK(items[k].qa_id == e.episode_id + "#object_yes_no#" + std::to_string(k));
  }
}

TEST_CASE("odd caps allow the extra item to be a yes") {
  Lexicon lex = default_lexicon();
  // Two episodes so each has negative supply from the other's objects.
  EpisodeTrace a = testsupport::make_episode(
      "a", "l1", Split::train, "(GotoLocation desk)\n(PickupObject pen desk)",
      "i picked up the pen.", lex);
  EpisodeTrace b = testsupport::make_episode(
      "b", "l1", Split::train, "(GotoLocation shelf)\n(PickupObject mug shelf)",
      "i picked up the mug.", lex);
  CorpusStats stats = compute_stats({a, b}, lex);

  GenPolicy policy = policy_with(4, 3);  // odd cap
  auto items = gen_object_questions(QType::object_yes_no, a, stats, policy, lex);
  REQUIRE(items.size() == 3);
  CHECK(count_answer(items, "yes") == 2);
  CHECK(count_answer(items, "no") == 1);
  // Interleaved yes, no, yes.
  CHECK(items[0].answer == "yes");
  CHECK(items[1].answer == "no");
  CHECK(items[2].answer == "yes");
}

TEST_CASE("zero negative supply collapses to yes-only with a note") {
  Lexicon lex = default_lexicon();
  EpisodeTrace solo = testsupport::make_episode(
      "solo", "l1", Split::train, "(GotoLocation desk)\n(PickupObject pen desk)",
      "i picked up the pen.", lex);
  CorpusStats stats = compute_stats({solo}, lex);  // every known object is visible here

  GenPolicy policy = policy_with(5, 6);
  GenNotes notes;
  auto items = gen_object_questions(QType::object_yes_no, solo, stats, policy, lex, &notes);
  CHECK_FALSE(items.empty());
  CHECK(count_answer(items, "no") == 0);
  CHECK(notes.zero_negative_object_episodes == 1);
  // Either/or needs both sides, so it yields nothing here.
  CHECK(gen_object_questions(QType::object_either_or, solo, stats, policy, lex).empty());
}

TEST_CASE("per-type cap below one is rejected") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(1, 0);
  CHECK_THROWS_AS(
      gen_object_questions(QType::object_yes_no, f.corpus[0], f.stats, policy, f.lex),
      UsageError);
}

TEST_CASE("build_static_dataset dedups, counts, and ignores worker count") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(11, 4);
  StaticDataset one = build_static_dataset(f.corpus, f.stats, policy, f.lex, 1);
  StaticDataset four = build_static_dataset(f.corpus, f.stats, policy, f.lex, 4);
  REQUIRE(one.items.size() == four.items.size());
  for (std::size_t i = 0; i < one.items.size(); ++i) {
    CHECK(qa_to_json(one.items[i]) == qa_to_json(four.items[i]));
  }
  CHECK(one.manifest == four.manifest);

  // No duplicate (episode, prompt) pairs survive.
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& q : one.items) {
    CHECK(seen.insert({q.episode_id, q.prompt}).second);
  }

  // Manifest counts match the items.
  std::map<std::string, std::int64_t> type_counts;
  for (const auto& q : one.items) type_counts[qtype_name(q.qtype)]++;
  for (const auto& [name, count] : one.manifest.at("type_counts").items()) {
    CHECK(count.get<std::int64_t>() == type_counts.at(name));
  }
  CHECK(one.manifest.at("n_items").get<std::int64_t>() ==
        static_cast<std::int64_t>(one.items.size()));
  CHECK(one.manifest.at("per_split_type_counts").contains("train"));
  CHECK(one.manifest.at("yes_counts").contains("object_yes_no"));
  CHECK(one.manifest.at("notes").contains("deduplicated_items"));

  // Summaries appear once per episode; pairs are off by default.
  CHECK(type_counts.at("short_summary") == static_cast<std::int64_t>(f.corpus.size()));
  CHECK(type_counts.at("long_summary") == static_cast<std::int64_t>(f.corpus.size()));
  CHECK(type_counts.count("before_after_pair") == 0);
}

TEST_CASE("enabled_types restricts generation") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(2, 4);
  policy.enabled_types = {QType::object_yes_no, QType::short_summary};
  StaticDataset ds = build_static_dataset(f.corpus, f.stats, policy, f.lex, 2);
  for (const auto& q : ds.items) {
    CHECK((q.qtype == QType::object_yes_no || q.qtype == QType::short_summary));
  }
}

TEST_CASE("template overrides change prompts and reject unknown keys") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(3, 4);
  policy.templates = templates_from_json({{"object_yes_no", "did the scene contain {}?"}});
  auto items = gen_object_questions(QType::object_yes_no, f.corpus[0], f.stats, policy, f.lex);
  REQUIRE_FALSE(items.empty());
  CHECK(items[0].prompt.rfind("did the scene contain ", 0) == 0);

  CHECK_THROWS_AS(templates_from_json({{"objet_yes_no", "x {}?"}}), DataError);
  // Slot-count mismatches surface at generation time.
  GenPolicy bad = policy_with(3, 4);
  bad.templates.object_yes_no = "was there {} or {}?";
  CHECK_THROWS_AS(gen_object_questions(QType::object_yes_no, f.corpus[0], f.stats, bad, f.lex),
                  DataError);
}

TEST_CASE("qa file round-trip preserves items") {
  const Fixture& f = fixture();
  testsupport::TempDir dir;
  GenPolicy policy = policy_with(13, 3);
  StaticDataset ds = build_static_dataset(f.corpus, f.stats, policy, f.lex, 2);
  std::string path = dir.file("qa.jsonl");
  write_qa_file(path, ds.items);
  auto back = read_qa_file(path);
  REQUIRE(back.size() == ds.items.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(qa_to_json(back[i]) == qa_to_json(ds.items[i]));
  }
}

TEST_CASE("epoch_stream reorders episodes and resamples per epoch") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(21, 6);

  auto epoch1 = epoch_stream(f.corpus, f.stats, policy, 1, f.lex);
  auto epoch1_again = epoch_stream(f.corpus, f.stats, policy, 1, f.lex);
  auto epoch2 = epoch_stream(f.corpus, f.stats, policy, 2, f.lex);

  REQUIRE(epoch1.size() == f.corpus.size());
  REQUIRE(epoch2.size() == f.corpus.size());

  // Same epoch seed reproduces byte-identical output.
  for (std::size_t i = 0; i < epoch1.size(); ++i) {
    CHECK(epoch1[i].episode_index == epoch1_again[i].episode_index);
    REQUIRE(epoch1[i].items.size() == epoch1_again[i].items.size());
    for (std::size_t k = 0; k < epoch1[i].items.size(); ++k) {
      CHECK(qa_to_json(epoch1[i].items[k]) == qa_to_json(epoch1_again[i].items[k]));
    }
  }

  // Every episode appears exactly once per epoch.
  std::set<std::size_t> seen1, seen2;
  for (const auto& entry : epoch1) seen1.insert(entry.episode_index);
  for (const auto& entry : epoch2) seen2.insert(entry.episode_index);
  CHECK(seen1.size() == f.corpus.size());
  CHECK(seen2.size() == f.corpus.size());

  // Different epochs shuffle differently (30 episodes: collision is 1/30!).
  std::vector<std::size_t> order1, order2;
  for (const auto& entry : epoch1) order1.push_back(entry.episode_index);
  for (const auto& entry : epoch2) order2.push_back(entry.episode_index);
  CHECK(order1 != order2);

  // Entries carry one item per question type plus the two summaries, with
  // epoch-tagged ids.
  for (const auto& entry : epoch1) {
    const EpisodeTrace& e = f.corpus[entry.episode_index];
    std::map<QType, int> per_type;
    for (const auto& q : entry.items) {
      per_type[q.qtype]++;
      CHECK(q.episode_id == e.episode_id);
      CHECK(q.qa_id == e.episode_id + "#" + qtype_name(q.qtype) + "#e");
    }
    for (QType t : kQuestionTypes) CHECK(per_type[t] <= 1);
    CHECK(per_type[QType::short_summary] == 1);
    CHECK(per_type[QType::long_summary] == 1);
  }
}

TEST_CASE("epoch items satisfy the same grounding rules as static ones") {
  const Fixture& f = fixture();
  GenPolicy policy = policy_with(5, 8);
  for (std::uint64_t epoch = 0; epoch < 5; ++epoch) {
    for (const auto& entry : epoch_stream(f.corpus, f.stats, policy, epoch, f.lex)) {
      const EpisodeTrace& e = f.corpus[entry.episode_index];
      std::set<std::string> vis = e.visible_union();
      for (const auto& q : entry.items) {
        if (q.qtype != QType::object_yes_no) continue;
        std::string sym = q.meta.at("object").get<std::string>();
        CHECK((q.answer == "yes") == (vis.count(sym) == 1));
      }
    }
  }
}

TEST_CASE("default ood bank is clean and yields two fifty-item sets") {
  Lexicon lex = default_lexicon();
  OodBank bank = default_ood_bank();
  REQUIRE(bank.ordinary.size() >= 50);
  REQUIRE(bank.extraordinary.size() >= 50);

  auto [ordinary, extraordinary] = gen_ood_sets(bank, lex);
  REQUIRE(ordinary.size() == 50);
  REQUIRE(extraordinary.size() == 50);
  for (std::size_t k = 0; k < ordinary.size(); ++k) {
    const QAItem& q = ordinary[k];
    CHECK(q.qtype == QType::ood_ordinary);
    CHECK(q.answer == "no");
    CHECK(q.episode_id == "ood-ordinary");
    CHECK(q.qa_id == "ood-ordinary#ood_ordinary#" + std::to_string(k));
    CHECK(q.prompt == bank.ordinary[k]);
  }
  for (const auto& q : extraordinary) {
    CHECK(q.qtype == QType::ood_extraordinary);
    CHECK(q.answer == "no");
    CHECK(q.episode_id == "ood-extraordinary");
  }
}

TEST_CASE("ood banks reject contamination and short lists") {
  Lexicon lex = default_lexicon();
  OodBank bank = default_ood_bank();
  // Naming a catalog verb with a catalog object is contamination.
  bank.ordinary[10] = "did you pick up the apple?";
  CHECK_THROWS_AS(gen_ood_sets(bank, lex), DataError);

  // A catalog verb alone (no catalog object) stays legal.
  bank = default_ood_bank();
  bank.ordinary[10] = "did you clean the attic?";
  CHECK_NOTHROW(gen_ood_sets(bank, lex));

  bank = default_ood_bank();
  bank.extraordinary.resize(49);
  CHECK_THROWS_AS(gen_ood_sets(bank, lex), DataError);
}
