#include "traceqa/cli.hpp"

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "traceqa/catalog.hpp"
#include "traceqa/errors.hpp"
#include "traceqa/metrics.hpp"
#include "traceqa/qa.hpp"
#include "traceqa/respond.hpp"
#include "traceqa/simulator.hpp"
#include "traceqa/split.hpp"
#include "traceqa/util.hpp"
#include "traceqa/version.hpp"

namespace traceqa {

using nlohmann::json;

namespace {

json parse_json_file(const std::string& path, const char* what) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw DataError(std::string("invalid JSON in ") + what + ": " + path);
  return j;
}

Lexicon lexicon_for(const std::string& path) {
  return path.empty() ? default_lexicon() : load_lexicon(path);
}

WorldCatalog catalog_for(const std::string& path) {
  return path.empty() ? default_catalog() : load_catalog(path);
}

CorpusStats stats_for(const std::string& stats_path, const std::vector<EpisodeTrace>& episodes,
                      const Lexicon& lex) {
  if (!stats_path.empty()) return stats_from_json(parse_json_file(stats_path, "stats file"));
  return compute_stats(episodes, lex);
}

void write_json_file(const std::string& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

struct SimulateArgs {
  std::string catalog_path, lexicon_path, out_dir;
  SimConfig cfg;
};

void run_simulate(const SimulateArgs& a) {
  Lexicon lex = lexicon_for(a.lexicon_path);
  WorldCatalog catalog = catalog_for(a.catalog_path);
  CorpusBundle bundle = generate_corpus(catalog, a.cfg, lex);

  std::filesystem::create_directories(a.out_dir);
  write_corpus(a.out_dir + "/episodes.jsonl", bundle.episodes);
  write_json_file(a.out_dir + "/stats.json", stats_to_json(bundle.stats));
  write_json_file(a.out_dir + "/manifest.json", bundle.manifest);
  std::cerr << "simulate: " << bundle.episodes.size() << " episodes -> " << a.out_dir << "\n";
}

struct IngestArgs {
  std::string input, schema_map_path, out;
};

void run_ingest(const IngestArgs& a) {
  json schema_map = json::object();
  if (!a.schema_map_path.empty()) {
    schema_map = parse_json_file(a.schema_map_path, "schema map");
  }
  std::vector<std::string> diagnostics;
  std::vector<EpisodeTrace> episodes = ingest_external(a.input, schema_map, diagnostics);
  for (const auto& d : diagnostics) std::cerr << "ingest: " << d << "\n";
  write_corpus(a.out, episodes);
  std::cerr << "ingest: kept " << episodes.size() << " episodes, skipped " << diagnostics.size()
            << "\n";
}

struct GenerateArgs {
  std::string episodes_path, stats_path, lexicon_path, templates_path, out, manifest_out;
  std::string types_csv, negative_weighting = "episode";
  GenPolicy policy;
  int workers = 1;
};

void run_generate(GenerateArgs& a) {
  Lexicon lex = lexicon_for(a.lexicon_path);
  std::vector<EpisodeTrace> corpus = read_corpus(a.episodes_path);
  CorpusStats stats = stats_for(a.stats_path, corpus, lex);

  if (a.negative_weighting == "step") {
    a.policy.negative_weighting = GenPolicy::NegWeighting::step;
  } else if (a.negative_weighting != "episode") {
    throw UsageError("--negative-weighting must be 'episode' or 'step'");
  }
  if (!a.types_csv.empty()) {
    for (const auto& name : split_tokens(a.types_csv)) a.policy.enabled_types.insert(qtype_from_name(name));
  }
  if (!a.templates_path.empty()) {
    a.policy.templates = templates_from_json(parse_json_file(a.templates_path, "templates file"));
  }

  StaticDataset ds = build_static_dataset(corpus, stats, a.policy, lex, a.workers);
  write_qa_file(a.out, ds.items);
  if (!a.manifest_out.empty()) write_json_file(a.manifest_out, ds.manifest);
  std::cerr << "generate: " << ds.items.size() << " items -> " << a.out << "\n";
}

struct OodArgs {
  std::string bank_path, lexicon_path, out_dir;
};

void run_ood(const OodArgs& a) {
  Lexicon lex = lexicon_for(a.lexicon_path);
  OodBank bank = a.bank_path.empty()
                     ? default_ood_bank()
                     : ood_bank_from_json(parse_json_file(a.bank_path, "question bank"));
  auto [ordinary, extraordinary] = gen_ood_sets(bank, lex);
  std::filesystem::create_directories(a.out_dir);
  write_qa_file(a.out_dir + "/ood_ordinary.jsonl", ordinary);
  write_qa_file(a.out_dir + "/ood_extraordinary.jsonl", extraordinary);
  std::cerr << "ood: 50 + 50 items -> " << a.out_dir << "\n";
}

struct SplitArgs {
  std::string episodes_path, stats_path, lexicon_path, mode = "object", out;
  std::string objects_csv, verb, rank_by = "summary";
  std::uint64_t seed = 0;
};

void run_split(const SplitArgs& a) {
  Lexicon lex = lexicon_for(a.lexicon_path);
  std::vector<EpisodeTrace> corpus = read_corpus(a.episodes_path);
  std::vector<std::string> warnings;
  SplitSpec spec;

  if (a.mode == "object") {
    CorpusStats stats = stats_for(a.stats_path, corpus, lex);
    bool by_visibility = a.rank_by == "visibility";
    if (!by_visibility && a.rank_by != "summary") {
      throw UsageError("--rank-by must be 'summary' or 'visibility'");
    }
    std::vector<std::string> ranking = rank_objects(stats, by_visibility);
    std::vector<std::string> heldout;
    if (!a.objects_csv.empty()) {
      heldout = split_tokens(a.objects_csv);
    } else {
      heldout = select_heldout(ranking, a.seed);
    }
    spec = partition_by_objects(corpus, heldout, a.seed, lex, ranking, &warnings);
  } else if (a.mode == "verb") {
    if (a.verb.empty()) throw UsageError("--mode verb requires --verb");
    std::optional<Verb> v = verb_from_name(a.verb);
    if (!v) throw UsageError("unknown verb '" + a.verb + "'");
    spec = partition_by_verb(corpus, *v, a.seed, lex, &warnings);
  } else {
    throw UsageError("--mode must be 'object' or 'verb'");
  }

  for (const auto& w : warnings) std::cerr << "split: warning: " << w << "\n";
  write_json_file(a.out, split_to_json(spec));
  std::cerr << "split: " << spec.heldout_episode_ids.size() << " of " << spec.qa_training.size()
            << " training episodes held out -> " << a.out << "\n";
}

struct StatsArgs {
  std::string episodes_path, lexicon_path, out;
};

void run_stats(const StatsArgs& a) {
  Lexicon lex = lexicon_for(a.lexicon_path);
  std::vector<EpisodeTrace> corpus = read_corpus(a.episodes_path);
  write_json_file(a.out, stats_to_json(compute_stats(corpus, lex)));
  std::cerr << "stats: " << corpus.size() << " episodes -> " << a.out << "\n";
}

struct EvaluateArgs {
  std::string qa_path, episodes_path, responder, split_path, out;
  std::string predictions_path, predictions_out, train_qa_path, stats_path;
  std::string lexicon_path, templates_path;
  std::uint64_t seed = 0;
  int timeout_ms = 30000;
  int workers = 1;
};

void run_evaluate(const EvaluateArgs& a) {
  Lexicon lex = lexicon_for(a.lexicon_path);
  std::vector<QAItem> qa = read_qa_file(a.qa_path);
  std::vector<EpisodeTrace> episodes;
  if (!a.episodes_path.empty()) episodes = read_corpus(a.episodes_path);

  std::map<std::string, std::string> predictions;
  if (!a.predictions_path.empty()) {
    if (!a.responder.empty()) {
      throw UsageError("--predictions and --responder are mutually exclusive");
    }
    predictions = read_predictions(a.predictions_path);
  } else if (a.responder.empty()) {
    throw UsageError("need --responder or --predictions");
  } else if (a.responder.rfind("cmd:", 0) == 0) {
    std::map<std::string, const EpisodeTrace*> by_id;
    for (const auto& e : episodes) by_id[e.episode_id] = &e;
    ExternalResponderSpec spec;
    spec.command = a.responder.substr(4);
    spec.timeout_ms = a.timeout_ms;
    spec.workers = a.workers;
    predictions = run_external_responder(qa, by_id, spec);
  } else {
    std::unique_ptr<Responder> responder;
    if (a.responder == "oracle") {
      responder = make_oracle_responder();
    } else if (a.responder == "constant-no") {
      responder = make_constant_responder("no");
    } else if (a.responder == "uniform") {
      CorpusStats stats = stats_for(a.stats_path, episodes, lex);
      responder = make_uniform_random_responder(a.seed, stats);
    } else if (a.responder == "prior") {
      if (a.train_qa_path.empty()) throw UsageError("responder 'prior' needs --train-qa");
      CorpusStats stats = stats_for(a.stats_path, episodes, lex);
      QuestionTemplates templates;
      if (!a.templates_path.empty()) {
        templates = templates_from_json(parse_json_file(a.templates_path, "templates file"));
      }
      std::vector<QAItem> train_qa = read_qa_file(a.train_qa_path);
      responder = make_prior_responder(train_qa, stats, lex, templates);
    } else {
      throw UsageError("unknown responder '" + a.responder +
                       "' (oracle|prior|constant-no|uniform|cmd:\"...\")");
    }
    if (responder) predictions = run_responder(qa, *responder);
  }

  if (!a.predictions_out.empty()) {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& item : qa) {
      auto p = predictions.find(item.qa_id);
      if (p != predictions.end()) rows.push_back(*p);
    }
    write_predictions(a.predictions_out, rows);
  }

  std::optional<SplitSpec> split;
  if (!a.split_path.empty()) split = load_split(a.split_path);
  EvalReport report = score_predictions(qa, predictions, lex, split ? &*split : nullptr,
                                        episodes.empty() ? nullptr : &episodes);
  write_json_file(a.out, report_to_json(report));
  std::cerr << "evaluate: " << report.n_items << " items (" << report.n_missing
            << " unanswered) -> " << a.out << "\n";
}

struct AggregateArgs {
  std::vector<std::string> report_paths;
  std::string out;
};

void run_aggregate(const AggregateArgs& a) {
  std::vector<EvalReport> reports;
  for (const auto& path : a.report_paths) {
    reports.push_back(report_from_json(parse_json_file(path, "report")));
  }
  write_json_file(a.out, aggregate_to_json(aggregate_runs(reports)));
  std::cerr << "aggregate: " << reports.size() << " runs -> " << a.out << "\n";
}

struct ValidateArgs {
  std::string episodes_path, lexicon_path, catalog_path;
};

void run_validate(const ValidateArgs& a) {
  Lexicon lex = lexicon_for(a.lexicon_path);
  if (!a.catalog_path.empty()) {
    validate_catalog(load_catalog(a.catalog_path), lex);
    std::cerr << "validate: catalog ok\n";
  }
  if (!a.episodes_path.empty()) {
    std::vector<EpisodeTrace> corpus = read_corpus(a.episodes_path);
    ValidationResult result = validate_corpus(corpus);
    if (!result.ok()) {
      for (const auto& v : result.violations) {
        std::cerr << "validate: " << v.field << ": " << v.message << "\n";
      }
      throw DataError(std::to_string(result.violations.size()) + " violations");
    }
    std::cerr << "validate: " << corpus.size() << " episodes ok\n";
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"question/answer generation and scoring for robot episode traces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("traceqa ") + kToolVersion + " (format " +
                                        std::to_string(kFormatVersion) + ")");

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "generate a synthetic episode corpus");
  c_sim->add_option("--catalog", sim.catalog_path, "world catalog JSON (default: built-in)");
  c_sim->add_option("--lexicon", sim.lexicon_path, "lexicon JSON (default: built-in)");
  c_sim->add_option("--n-train", sim.cfg.n_train, "train episode count")->required();
  c_sim->add_option("--n-valid-seen", sim.cfg.n_valid_seen, "valid-seen episode count")
      ->required();
  c_sim->add_option("--n-valid-unseen", sim.cfg.n_valid_unseen, "valid-unseen episode count")
      ->required();
  c_sim->add_option("--seed", sim.cfg.seed, "master seed")->required();
  c_sim->add_option("--distractor-rate", sim.cfg.distractor_visibility_rate,
                    "distractor visibility rate in [0,1]");
  c_sim->add_option("--unseen-layout-fraction", sim.cfg.unseen_layout_fraction,
                    "fraction of layouts reserved for valid_unseen");
  c_sim->add_option("--workers", sim.cfg.workers, "worker threads");
  c_sim->add_option("--out-dir", sim.out_dir, "output directory")->required();

  IngestArgs ing;
  CLI::App* c_ing = app.add_subcommand("ingest", "convert external traces to the corpus format");
  c_ing->add_option("--input", ing.input, "external JSONL trace file")->required();
  c_ing->add_option("--schema-map", ing.schema_map_path, "field-name mapping JSON");
  c_ing->add_option("--out", ing.out, "output corpus JSONL")->required();

  GenerateArgs gen;
  CLI::App* c_gen = app.add_subcommand("generate", "build the static question/answer dataset");
  c_gen->add_option("--episodes", gen.episodes_path, "episode corpus JSONL")->required();
  c_gen->add_option("--stats", gen.stats_path, "stats JSON (default: computed from --episodes)");
  c_gen->add_option("--lexicon", gen.lexicon_path, "lexicon JSON (default: built-in)");
  c_gen->add_option("--per-type", gen.policy.per_type_cap, "items per question type per episode");
  c_gen->add_option("--seed", gen.policy.seed, "master seed")->required();
  c_gen->add_option("--negative-weighting", gen.negative_weighting,
                    "negative-object weighting: episode|step");
  c_gen->add_flag("--enable-before-after-pairs", gen.policy.enable_before_after_pairs,
                  "also generate 'did you A before B?' items");
  c_gen->add_option("--types", gen.types_csv, "space-separated question types to keep");
  c_gen->add_option("--templates", gen.templates_path, "question template overrides JSON");
  c_gen->add_option("--workers", gen.workers, "worker threads");
  c_gen->add_option("--out", gen.out, "output QA JSONL")->required();
  c_gen->add_option("--manifest-out", gen.manifest_out, "where to write the manifest JSON");

  OodArgs ood;
  CLI::App* c_ood = app.add_subcommand("ood", "emit the out-of-domain probe sets");
  c_ood->add_option("--bank", ood.bank_path, "question bank JSON (default: built-in)");
  c_ood->add_option("--lexicon", ood.lexicon_path, "lexicon JSON (default: built-in)");
  c_ood->add_option("--out-dir", ood.out_dir, "output directory")->required();

  SplitArgs spl;
  CLI::App* c_spl = app.add_subcommand("split", "build a zero-shot hold-out split");
  c_spl->add_option("--episodes", spl.episodes_path, "episode corpus JSONL")->required();
  c_spl->add_option("--stats", spl.stats_path, "stats JSON (default: computed)");
  c_spl->add_option("--lexicon", spl.lexicon_path, "lexicon JSON (default: built-in)");
  c_spl->add_option("--mode", spl.mode, "hold-out mode: object|verb");
  c_spl->add_option("--objects", spl.objects_csv,
                    "space-separated object symbols (default: seeded selection)");
  c_spl->add_option("--verb", spl.verb, "held-out verb name for --mode verb");
  c_spl->add_option("--rank-by", spl.rank_by, "object ranking key: summary|visibility");
  c_spl->add_option("--seed", spl.seed, "selection seed")->required();
  c_spl->add_option("--out", spl.out, "output split JSON")->required();

  StatsArgs sta;
  CLI::App* c_sta = app.add_subcommand("stats", "compute corpus statistics");
  c_sta->add_option("--episodes", sta.episodes_path, "episode corpus JSONL")->required();
  c_sta->add_option("--lexicon", sta.lexicon_path, "lexicon JSON (default: built-in)");
  c_sta->add_option("--out", sta.out, "output stats JSON")->required();

  EvaluateArgs ev;
  CLI::App* c_ev = app.add_subcommand("evaluate", "run a responder and score it");
  c_ev->add_option("--qa", ev.qa_path, "QA JSONL to answer")->required();
  c_ev->add_option("--episodes", ev.episodes_path, "episode corpus JSONL (for frame refs)");
  c_ev->add_option("--responder", ev.responder,
                   "oracle|prior|constant-no|uniform|cmd:\"<argv>\"");
  c_ev->add_option("--predictions", ev.predictions_path, "score this prediction file instead");
  c_ev->add_option("--predictions-out", ev.predictions_out, "save raw predictions JSONL");
  c_ev->add_option("--train-qa", ev.train_qa_path, "training QA JSONL for the prior responder");
  c_ev->add_option("--stats", ev.stats_path, "stats JSON for prior/uniform responders");
  c_ev->add_option("--split", ev.split_path, "split JSON for transfer sections");
  c_ev->add_option("--lexicon", ev.lexicon_path, "lexicon JSON (default: built-in)");
  c_ev->add_option("--templates", ev.templates_path, "question template overrides JSON");
  c_ev->add_option("--seed", ev.seed, "seed for the uniform responder");
  c_ev->add_option("--timeout-ms", ev.timeout_ms, "per-item timeout for cmd responders");
  c_ev->add_option("--workers", ev.workers, "parallel children for cmd responders");
  c_ev->add_option("--out", ev.out, "output report JSON")->required();

  AggregateArgs agg;
  CLI::App* c_agg = app.add_subcommand("aggregate", "mean/stddev across evaluation reports");
  c_agg->add_option("--reports", agg.report_paths, "two or more report JSON files")
      ->required()
      ->expected(-2);
  c_agg->add_option("--out", agg.out, "output aggregate JSON")->required();

  ValidateArgs val;
  CLI::App* c_val = app.add_subcommand("validate", "check corpus or catalog files");
  c_val->add_option("--episodes", val.episodes_path, "episode corpus JSONL");
  c_val->add_option("--lexicon", val.lexicon_path, "lexicon JSON (default: built-in)");
  c_val->add_option("--catalog", val.catalog_path, "world catalog JSON");

  std::vector<const char*> argv;
  argv.push_back("traceqa");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*c_sim) run_simulate(sim);
    else if (*c_ing) run_ingest(ing);
    else if (*c_gen) run_generate(gen);
    else if (*c_ood) run_ood(ood);
    else if (*c_spl) run_split(spl);
    else if (*c_sta) run_stats(sta);
    else if (*c_ev) run_evaluate(ev);
    else if (*c_agg) run_aggregate(agg);
    else if (*c_val) run_validate(val);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace traceqa
