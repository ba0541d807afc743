#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "support/test_support.hpp"
#include "traceqa/errors.hpp"
#include "traceqa/simulator.hpp"
#include "traceqa/util.hpp"

using namespace traceqa;

namespace {

SimConfig small_cfg(int train = 12, int vseen = 3, int vunseen = 3, std::uint64_t seed = 42) {
  SimConfig cfg;
  cfg.n_train = train;
  cfg.n_valid_seen = vseen;
  cfg.n_valid_unseen = vunseen;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("sim config validation") {
  CHECK_NOTHROW(validate_sim_config(small_cfg()));
  SimConfig bad = small_cfg();
  bad.n_train = -1;
  CHECK_THROWS_AS(validate_sim_config(bad), UsageError);
  bad = small_cfg();
  bad.distractor_visibility_rate = 1.5;
  CHECK_THROWS_AS(validate_sim_config(bad), UsageError);
  bad = small_cfg();
  bad.unseen_layout_fraction = 0.0;
  CHECK_THROWS_AS(validate_sim_config(bad), UsageError);
  bad = small_cfg();
  bad.workers = 0;
  CHECK_THROWS_AS(validate_sim_config(bad), UsageError);
}

TEST_CASE("reserved layouts are the trailing ceil(fraction * n), at least one") {
  WorldCatalog cat = default_catalog();
  REQUIRE(cat.layouts.size() == 8);
  auto reserved = reserved_layouts(cat, 0.25);
  CHECK(reserved == std::vector<std::string>{"layout_07", "layout_08"});
  CHECK(reserved_layouts(cat, 0.01) == std::vector<std::string>{"layout_08"});
  CHECK(reserved_layouts(cat, 0.5).size() == 4);
}

TEST_CASE("sample_episode is a pure function of its inputs") {
  WorldCatalog cat = default_catalog();
  Lexicon lex = default_lexicon();
  EpisodeTrace a = sample_episode(cat, "layout_01", 7, 0.3, lex);
  EpisodeTrace b = sample_episode(cat, "layout_01", 7, 0.3, lex);
  CHECK(episode_to_json(a) == episode_to_json(b));
  EpisodeTrace c = sample_episode(cat, "layout_01", 8, 0.3, lex);
  CHECK(episode_to_json(a) != episode_to_json(c));
}

TEST_CASE("sampled episodes satisfy the trace invariants") {
  WorldCatalog cat = default_catalog();
  Lexicon lex = default_lexicon();
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    EpisodeTrace e = sample_episode(cat, "layout_02", seed, 0.3, lex);
    e.episode_id = "probe";
    auto r = validate_episode(e);
    INFO("seed ", seed);
    for (const auto& v : r.violations) INFO(v.field, ": ", v.message);
    CHECK(r.ok());
    CHECK_FALSE(e.short_summary.empty());
    CHECK_FALSE(e.plan.empty());
    // Every visible object belongs to the layout the episode ran in.
    const LayoutSpec* layout = cat.find_layout("layout_02");
    REQUIRE(layout != nullptr);
    std::set<std::string> allowed(layout->objects.begin(), layout->objects.end());
    for (const auto& sym : e.visible_union()) CHECK(allowed.count(sym) == 1);
  }
}

TEST_CASE("zero distractor rate leaves only plan-driven visibility") {
  WorldCatalog cat = default_catalog();
  Lexicon lex = default_lexicon();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EpisodeTrace e = sample_episode(cat, "layout_03", seed, 0.0, lex);
    std::set<std::string> plan_args;
    for (const auto& s : e.plan) plan_args.insert(s.args.begin(), s.args.end());
    for (const auto& sym : e.visible_union()) CHECK(plan_args.count(sym) == 1);
  }
}

TEST_CASE("higher distractor rate never shrinks visibility") {
  WorldCatalog cat = default_catalog();
  Lexicon lex = default_lexicon();
  double lo_total = 0, hi_total = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    lo_total += sample_episode(cat, "layout_04", seed, 0.05, lex).visible_union().size();
    hi_total += sample_episode(cat, "layout_04", seed, 0.9, lex).visible_union().size();
  }
  CHECK(hi_total > lo_total);
}

TEST_CASE("generate_corpus lays out splits in order with reserved layouts") {
  WorldCatalog cat = default_catalog();
  Lexicon lex = default_lexicon();
  SimConfig cfg = small_cfg();
  CorpusBundle bundle = generate_corpus(cat, cfg, lex);

  REQUIRE(bundle.episodes.size() == 18);
  CHECK(bundle.episodes[0].episode_id == "train-000000");
  CHECK(bundle.episodes[12].episode_id == "vseen-000000");
  CHECK(bundle.episodes[15].episode_id == "vunseen-000000");
  CHECK(validate_corpus(bundle.episodes).ok());
  CHECK(bundle.stats.n_episodes == 18);
  CHECK(bundle.manifest.at("kind") == "episode_corpus");
  CHECK(bundle.manifest.at("counts").at("train") == 12);
  CHECK(bundle.manifest.at("reserved_layouts") ==
        nlohmann::json(std::vector<std::string>{"layout_07", "layout_08"}));

  std::set<std::string> reserved = {"layout_07", "layout_08"};
  for (const auto& e : bundle.episodes) {
    CHECK_FALSE(e.short_summary.empty());
    CHECK(e.frame_refs.size() == e.plan.size());
    if (e.split == Split::valid_unseen) {
      CHECK(reserved.count(e.layout_id) == 1);
    } else {
      CHECK(reserved.count(e.layout_id) == 0);
    }
  }
}

TEST_CASE("generate_corpus output is independent of the worker count") {
  WorldCatalog cat = default_catalog();
  Lexicon lex = default_lexicon();
  SimConfig one = small_cfg(20, 5, 5, 99);
  SimConfig eight = one;
  one.workers = 1;
  eight.workers = 8;
  CorpusBundle a = generate_corpus(cat, one, lex);
  CorpusBundle b = generate_corpus(cat, eight, lex);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(episode_to_json(a.episodes[i]) == episode_to_json(b.episodes[i]));
  }
  CHECK(stats_to_json(a.stats) == stats_to_json(b.stats));
}

TEST_CASE("task variety shows up across seeds") {
  WorldCatalog cat = default_catalog();
  Lexicon lex = default_lexicon();
  std::set<Verb> seen;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    EpisodeTrace e = sample_episode(cat, "layout_01", seed, 0.3, lex);
    for (const auto& s : e.plan) seen.insert(s.verb);
  }
  // Every verb in the catalog's task repertoire eventually appears.
  for (Verb v : {Verb::GotoLocation, Verb::PickupObject, Verb::PutObject, Verb::HeatObject,
                 Verb::CoolObject, Verb::CleanObject, Verb::SliceObject, Verb::ToggleObject}) {
    CHECK(seen.count(v) == 1);
  }
}

TEST_CASE("ingest skips broken lines with diagnostics and keeps valid ones") {
  testsupport::TempDir dir;
  Lexicon lex = default_lexicon();
  EpisodeTrace good = testsupport::make_episode(
      "ext-1", "kitchen", Split::train, "(GotoLocation desk)\n(PickupObject pen desk)",
      "i picked up the pen.", lex);
  EpisodeTrace bad = good;  // invalid: summary removed
  bad.episode_id = "ext-2";
  bad.short_summary.clear();

  std::string path = dir.file("ext.jsonl");
  write_file(path, episode_to_json(good).dump() + "\n" + "not json at all\n" +
                       episode_to_json(bad).dump() + "\n");
  std::vector<std::string> diags;
  auto kept = ingest_external(path, nlohmann::json::object(), diags);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].episode_id == "ext-1");
  REQUIRE(diags.size() == 2);
  CHECK(diags[0].find("line 2") != std::string::npos);
  CHECK(diags[1].find("line 3") != std::string::npos);
}

TEST_CASE("ingest renames fields through the schema map") {
  testsupport::TempDir dir;
  Lexicon lex = default_lexicon();
  EpisodeTrace e = testsupport::make_episode(
      "ext-9", "kitchen", Split::valid_seen, "(GotoLocation shelf)", "i went to the shelf.", lex);
  nlohmann::json theirs = episode_to_json(e);
  theirs["trace_id"] = theirs["episode_id"];
  theirs.erase("episode_id");
  std::string path = dir.file("mapped.jsonl");
  write_file(path, theirs.dump() + "\n");

  std::vector<std::string> diags;
  nlohmann::json schema = {{"fields", {{"episode_id", "trace_id"}}}};
  auto kept = ingest_external(path, schema, diags);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].episode_id == "ext-9");
  CHECK(diags.empty());

  // Without the mapping the line is skipped for the missing field.
  diags.clear();
  auto none = ingest_external(path, nlohmann::json::object(), diags);
  CHECK(none.empty());
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].find("episode_id") != std::string::npos);

  // Mapping an unknown native field is an error, not a skip.
  nlohmann::json bad_schema = {{"fields", {{"trajectory", "steps"}}}};
  CHECK_THROWS_AS(ingest_external(path, bad_schema, diags), DataError);
}
