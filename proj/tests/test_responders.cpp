#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "traceqa/episode.hpp"
#include "traceqa/errors.hpp"
#include "traceqa/lexicon.hpp"
#include "traceqa/qa.hpp"
#include "traceqa/respond.hpp"
#include "traceqa/stats.hpp"
#include "support/test_support.hpp"

using namespace traceqa;
using testsupport::TempDir;
using testsupport::make_episode;

namespace {

QAItem make_item(const std::string& qa_id, QType t, const std::string& prompt,
                 const std::string& answer, const std::string& episode_id = "e-0") {
  QAItem item;
  item.qa_id = qa_id;
  item.episode_id = episode_id;
  item.qtype = t;
  item.prompt = prompt;
  item.answer = answer;
  return item;
}

// Five train episodes giving asymmetric frequencies:
//   visibility: desk 3, pen 2, fridge 2, apple/mug/bread/knife 1
//   successors: go to the desk -> pick up the pen x2, -> pick up the apple x1,
//               go to the fridge -> put/slice x1 each (a tie)
std::vector<EpisodeTrace> prior_corpus(const Lexicon& lex) {
  std::vector<EpisodeTrace> corpus;
  corpus.push_back(make_episode("e-0", "layout_01", Split::train,
                                "(GotoLocation desk)\n(PickupObject pen desk)", "got the pen",
                                lex));
  corpus.push_back(make_episode("e-1", "layout_01", Split::train,
                                "(GotoLocation desk)\n(PickupObject pen desk)", "got the pen",
                                lex));
  corpus.push_back(make_episode("e-2", "layout_02", Split::train,
                                "(GotoLocation desk)\n(PickupObject apple desk)", "got the apple",
                                lex));
  corpus.push_back(make_episode("e-3", "layout_02", Split::train,
                                "(GotoLocation fridge)\n(PutObject mug fridge)", "stored the mug",
                                lex));
  corpus.push_back(make_episode("e-4", "layout_03", Split::train,
                                "(GotoLocation fridge)\n(SliceObject bread knife)",
                                "cut the bread", lex));
  return corpus;
}

}  // namespace

TEST_CASE("oracle and constant responders") {
  std::vector<QAItem> qa{make_item("q0", QType::object_yes_no, "was there a pen?", "yes"),
                         make_item("q1", QType::short_summary, "summarize what you did.",
                                   "got the pen")};

  auto oracle = make_oracle_responder();
  auto gold = run_responder(qa, *oracle);
  CHECK(gold.at("q0") == "yes");
  CHECK(gold.at("q1") == "got the pen");

  auto constant = make_constant_responder("no");
  auto flat = run_responder(qa, *constant);
  CHECK(flat.at("q0") == "no");
  CHECK(flat.at("q1") == "no");
}

TEST_CASE("uniform responder is a pure function of the qa id") {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus = prior_corpus(lex);
  CorpusStats stats = compute_stats(corpus, lex);

  auto a = make_uniform_random_responder(9, stats);
  auto b = make_uniform_random_responder(9, stats);
  QAItem item = make_item("e-0#object_yes_no#0", QType::object_yes_no, "was there a pen?", "yes");
  std::string first = a->answer(item);
  CHECK(a->answer(item) == first);  // stateless across calls
  CHECK(b->answer(item) == first);  // and across instances

  // Different seeds may collide on one item, but not on a hundred.
  auto c = make_uniform_random_responder(10, stats);
  int disagreements = 0;
  for (int k = 0; k < 100; ++k) {
    QAItem probe = make_item("q" + std::to_string(k), QType::object_yes_no, "was there a pen?",
                             "yes");
    if (a->answer(probe) != c->answer(probe)) disagreements++;
  }
  CHECK(disagreements > 0);
}

TEST_CASE("uniform responder answer domains") {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus = prior_corpus(lex);
  CorpusStats stats = compute_stats(corpus, lex);
  auto r = make_uniform_random_responder(4, stats);

  std::set<std::string> phrases;
  for (const auto& [action, phrase] : stats.action_phrase) phrases.insert(phrase);

  int yes = 0, no = 0;
  for (int k = 0; k < 200; ++k) {
    std::string id = "q" + std::to_string(k);
    std::string yn = r->answer(make_item(id, QType::object_yes_no, "was there a pen?", "yes"));
    REQUIRE((yn == "yes" || yn == "no"));
    (yn == "yes" ? yes : no)++;

    std::string obj = r->answer(make_item(id, QType::object_either_or,
                                          "was there a pen or an apple?", "pen"));
    CHECK((obj == "pen" || obj == "apple"));  // articles stripped

    std::string act = r->answer(make_item(id, QType::action_either_or,
                                          "did you go to the desk or pick up the pen?",
                                          "go to the desk"));
    CHECK((act == "go to the desk" || act == "pick up the pen"));

    std::string tmp = r->answer(make_item(id, QType::temporal_after_simple,
                                          "what did you do just after go to the desk?",
                                          "pick up the pen"));
    CHECK(phrases.count(tmp) == 1);
  }
  CHECK(yes > 0);
  CHECK(no > 0);

  CHECK(r->answer(make_item("s", QType::short_summary, "summarize what you did.", "x")) == "");
  CHECK(r->answer(make_item("l", QType::long_summary, "narrate what you did.", "x")) == "");
  // A prompt that does not fit the either/or surface form yields nothing.
  CHECK(r->answer(make_item("m", QType::object_either_or, "pen or apple", "pen")) == "");
}

TEST_CASE("prior responder majority vote with ties to no") {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus = prior_corpus(lex);
  CorpusStats stats = compute_stats(corpus, lex);

  std::vector<QAItem> train;
  for (int k = 0; k < 3; ++k) {
    train.push_back(make_item("a" + std::to_string(k), QType::object_yes_no, "p?", "yes"));
  }
  train.push_back(make_item("a3", QType::object_yes_no, "p?", "no"));
  train.push_back(make_item("b0", QType::action_simple_yes_no, "p?", "yes"));
  train.push_back(make_item("b1", QType::action_simple_yes_no, "p?", "yes"));
  train.push_back(make_item("b2", QType::action_simple_yes_no, "p?", "no"));
  train.push_back(make_item("b3", QType::action_simple_yes_no, "p?", "no"));
  train.push_back(make_item("s0", QType::short_summary, "summarize what you did.", "beta"));
  train.push_back(make_item("s1", QType::short_summary, "summarize what you did.", "alpha"));
  train.push_back(make_item("s2", QType::short_summary, "summarize what you did.", "alpha"));
  train.push_back(make_item("s3", QType::short_summary, "summarize what you did.", "beta"));
  train.push_back(make_item("l0", QType::long_summary, "narrate what you did.", "zed"));
  train.push_back(make_item("l1", QType::long_summary, "narrate what you did.", "zed"));
  train.push_back(make_item("l2", QType::long_summary, "narrate what you did.", "yak"));

  auto r = make_prior_responder(train, stats, lex);
  CHECK(r->answer(make_item("x0", QType::object_yes_no, "was there a mug?", "no")) == "yes");
  // 2-2 tie goes to "no".
  CHECK(r->answer(make_item("x1", QType::action_simple_yes_no, "did you nap?", "no")) == "no");
  // Never-trained yes/no kinds (the out-of-domain probes included) also get "no".
  CHECK(r->answer(make_item("x2", QType::action_complex_yes_no, "did you nap?", "no")) == "no");
  CHECK(r->answer(make_item("x3", QType::ood_ordinary, "did you mop the floor?", "no")) == "no");
  CHECK(r->answer(make_item("x4", QType::ood_extraordinary, "did you fly?", "no")) == "no");
  // Summary ties break toward the lexicographically smaller training string.
  CHECK(r->answer(make_item("x5", QType::short_summary, "summarize what you did.", "")) ==
        "alpha");
  CHECK(r->answer(make_item("x6", QType::long_summary, "narrate what you did.", "")) == "zed");
}

TEST_CASE("prior responder either/or picks the more frequent option") {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus = prior_corpus(lex);
  CorpusStats stats = compute_stats(corpus, lex);
  auto r = make_prior_responder({}, stats, lex);

  auto object_pick = [&](const std::string& prompt) {
    return r->answer(make_item("q", QType::object_either_or, prompt, ""));
  };
  // pen is visible in two episodes, mug in one; order must not matter.
  CHECK(object_pick("was there a pen or a mug?") == "pen");
  CHECK(object_pick("was there a mug or a pen?") == "pen");
  // mug and knife are tied at one episode each: the first option wins.
  CHECK(object_pick("was there a mug or a knife?") == "mug");
  CHECK(object_pick("was there a knife or a mug?") == "knife");

  auto action_pick = [&](const std::string& prompt) {
    return r->answer(make_item("q", QType::action_either_or, prompt, ""));
  };
  // go-to-desk happens in three episodes, pick-up-pen in two.
  CHECK(action_pick("did you go to the desk or pick up the pen?") == "go to the desk");
  CHECK(action_pick("did you pick up the pen or go to the desk?") == "go to the desk");
  // one-episode actions tie: the first option wins.
  CHECK(action_pick("did you put the mug in the fridge or slice the bread with the knife?") ==
        "put the mug in the fridge");
  CHECK(action_pick("did you slice the bread with the knife or put the mug in the fridge?") ==
        "slice the bread with the knife");
}

TEST_CASE("prior responder temporal neighbors and fallback") {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus = prior_corpus(lex);
  CorpusStats stats = compute_stats(corpus, lex);
  auto r = make_prior_responder({}, stats, lex);

  // After the desk trip, picking up the pen (2 occurrences) beats the apple (1).
  CHECK(r->answer(make_item("q0", QType::temporal_after_simple,
                            "what did you do just after go to the desk?", "")) ==
        "pick up the pen");
  // Before picking up the pen there is only one observed predecessor.
  CHECK(r->answer(make_item("q1", QType::temporal_before_simple,
                            "what did you do just before pick up the pen?", "")) ==
        "go to the desk");
  // Tied successors of the fridge trip break lexicographically.
  CHECK(r->answer(make_item("q2", QType::temporal_after_simple,
                            "what did you do just after go to the fridge?", "")) ==
        "put the mug in the fridge");
  // An anchor with no observed neighbor falls back to the most frequent
  // action phrase in the corpus (the thrice-performed desk trip).
  CHECK(r->answer(make_item("q3", QType::temporal_after_simple,
                            "what did you do just after turn on the desk lamp?", "")) ==
        "go to the desk");
  CHECK(r->answer(make_item("q4", QType::temporal_before_complex,
                            "what did you do just before some unseen narration?", "")) ==
        "go to the desk");
}

TEST_CASE("prior responder honors template overrides") {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus = prior_corpus(lex);
  CorpusStats stats = compute_stats(corpus, lex);

  QuestionTemplates custom;
  custom.object_either_or = "pick one: {} / {}.";
  auto r = make_prior_responder({}, stats, lex, custom);
  CHECK(r->answer(make_item("q", QType::object_either_or, "pick one: a mug / a pen.", "")) ==
        "pen");
  // The default-template prior cannot parse the custom surface form.
  auto plain = make_prior_responder({}, stats, lex);
  CHECK(plain->answer(make_item("q", QType::object_either_or, "pick one: a mug / a pen.", "")) ==
        "");
}

TEST_CASE("split_command quoting") {
  CHECK(split_command("a b  c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_command("run\t--flag value") == std::vector<std::string>{"run", "--flag", "value"});
  CHECK(split_command("run 'two words' x") == std::vector<std::string>{"run", "two words", "x"});
  CHECK(split_command("ab'cd'e") == std::vector<std::string>{"abcde"});
  CHECK(split_command("x ''") == std::vector<std::string>{"x", ""});
  // Double quotes honor \" and \\ escapes; single quotes are literal.
  CHECK(split_command("run \"a \\\" b\"") == std::vector<std::string>{"run", "a \" b"});
  CHECK(split_command("run \"a \\\\ b\"") == std::vector<std::string>{"run", "a \\ b"});
  CHECK(split_command("run 'a \\ b'") == std::vector<std::string>{"run", "a \\ b"});
  // Bare backslash escapes the next character.
  CHECK(split_command("a\\ b") == std::vector<std::string>{"a b"});

  CHECK_THROWS_AS(split_command("run 'oops"), UsageError);
  CHECK_THROWS_AS(split_command("run \"oops"), UsageError);
  CHECK_THROWS_AS(split_command(""), UsageError);
  CHECK_THROWS_AS(split_command("   "), UsageError);
}

TEST_CASE("external responder answers gold and shards consistently") {
  Lexicon lex = default_lexicon();
  std::vector<EpisodeTrace> corpus = prior_corpus(lex);
  CorpusStats stats = compute_stats(corpus, lex);
  GenPolicy policy;
  policy.per_type_cap = 2;
  policy.seed = 5;
  StaticDataset dataset = build_static_dataset(corpus, stats, policy, lex);
  REQUIRE(dataset.items.size() > 10);

  TempDir tmp;
  std::string qa_path = tmp.file("qa.jsonl");
  write_qa_file(qa_path, dataset.items);

  std::map<std::string, const EpisodeTrace*> episodes;
  for (const auto& e : corpus) episodes[e.episode_id] = &e;

  ExternalResponderSpec spec;
  spec.command = std::string(TRACEQA_STUB_RESPONDER) + " gold " + qa_path;
  spec.timeout_ms = 10000;
  auto out = run_external_responder(dataset.items, episodes, spec);

  auto oracle = make_oracle_responder();
  auto want = run_responder(dataset.items, *oracle);
  CHECK(out == want);

  spec.workers = 3;
  CHECK(run_external_responder(dataset.items, episodes, spec) == want);
}

TEST_CASE("external responder timeout leaves one empty answer") {
  std::vector<QAItem> qa;
  for (int k = 0; k < 6; ++k) {
    qa.push_back(make_item("q" + std::to_string(k), QType::object_yes_no, "was there a pen?",
                           "yes"));
  }
  ExternalResponderSpec spec;
  spec.command = std::string(TRACEQA_STUB_RESPONDER) + " sleep-on q3 2000";
  spec.timeout_ms = 150;
  auto out = run_external_responder(qa, {}, spec);
  REQUIRE(out.size() == 6);
  CHECK(out.at("q3") == "");
  // The restarted child keeps serving the rest of the shard.
  for (int k = 0; k < 6; ++k) {
    if (k == 3) continue;
    CHECK(out.at("q" + std::to_string(k)) == "no");
  }
}

TEST_CASE("external responder protocol violations raise") {
  std::vector<QAItem> qa;
  for (int k = 0; k < 5; ++k) {
    qa.push_back(make_item("q" + std::to_string(k), QType::object_yes_no, "was there a pen?",
                           "yes"));
  }
  ExternalResponderSpec spec;
  spec.timeout_ms = 5000;

  spec.command = std::string(TRACEQA_STUB_RESPONDER) + " die-after 2";
  CHECK_THROWS_AS(run_external_responder(qa, {}, spec), ProtocolError);

  spec.command = std::string(TRACEQA_STUB_RESPONDER) + " garbage";
  try {
    run_external_responder(qa, {}, spec);
    FAIL("garbage output was accepted");
  } catch (const ProtocolError& ex) {
    CHECK(std::string(ex.what()).find("malformed responder line") != std::string::npos);
  }
  // The same failure propagates out of a multi-worker run.
  spec.workers = 3;
  CHECK_THROWS_AS(run_external_responder(qa, {}, spec), ProtocolError);
  spec.workers = 1;

  spec.command = std::string(TRACEQA_STUB_RESPONDER) + " wrong-id";
  try {
    run_external_responder(qa, {}, spec);
    FAIL("mismatched id was accepted");
  } catch (const ProtocolError& ex) {
    std::string msg = ex.what();
    CHECK(msg.find("for request 'q0'") != std::string::npos);
    CHECK(msg.find("q0-x") != std::string::npos);
  }
}

TEST_CASE("external responder rejects bad run parameters") {
  std::vector<QAItem> qa{make_item("q0", QType::object_yes_no, "was there a pen?", "yes")};
  ExternalResponderSpec spec;
  spec.command = std::string(TRACEQA_STUB_RESPONDER) + " echo-no";

  spec.workers = 0;
  CHECK_THROWS_AS(run_external_responder(qa, {}, spec), UsageError);
  spec.workers = 1;
  spec.timeout_ms = 0;
  CHECK_THROWS_AS(run_external_responder(qa, {}, spec), UsageError);
}
