#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "traceqa/episode.hpp"
#include "traceqa/lexicon.hpp"
#include "traceqa/qa.hpp"
#include "traceqa/stats.hpp"

namespace traceqa {

// A responder maps one QA item to raw answer text. Builtins see only the
// item (plus whatever they were constructed from); the gold answer is never
// passed except to the oracle.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::string answer(const QAItem& item) = 0;
};

std::unique_ptr<Responder> make_oracle_responder();
std::unique_ptr<Responder> make_constant_responder(std::string text);

// Uniform guesser: yes/no types flip a coin, either/or types pick one of the
// two options parsed from the prompt, temporal types draw uniformly from the
// corpus action-phrase vocabulary, summaries return "". Seeded per item by
// (seed, qa_id), so results are order- and worker-independent.
std::unique_ptr<Responder> make_uniform_random_responder(std::uint64_t seed,
                                                         const CorpusStats& stats);

// Regularity-only baseline built from training artifacts; at answer time it
// sees prompts alone. Yes/no types answer the majority training answer for
// the qtype (ties "no"); either/or picks the option with the higher corpus
// frequency; temporal picks the most frequent adjacent action for the anchor
// parsed from the prompt, falling back to the globally most frequent action
// phrase; summaries return the most frequent training summary string.
std::unique_ptr<Responder> make_prior_responder(const std::vector<QAItem>& train_qa,
                                                const CorpusStats& stats, const Lexicon& lex,
                                                const QuestionTemplates& templates = {});

// Runs a builtin responder over a QA set in file order.
std::map<std::string, std::string> run_responder(const std::vector<QAItem>& qa, Responder& r);

// External responder: a child process speaking JSON lines on stdin/stdout.
// Request:  {"id": ..., "episode_id": ..., "prompt": ..., "frame_refs": [...]}
// Response: {"id": ..., "answer": ...}
// One request is outstanding at a time per child. A response that misses the
// per-item timeout is recorded as an empty answer and the child is restarted.
// Crashes and malformed responses raise ProtocolError carrying the last
// exchanged line. With workers > 1, items are partitioned across N children
// by FNV(qa_id) % N; results are identical to a single child because every
// item's answer depends only on its own request.
struct ExternalResponderSpec {
  std::string command;       // argv string, shell-style quoting
  int timeout_ms = 30000;
  int workers = 1;
};

std::map<std::string, std::string> run_external_responder(
    const std::vector<QAItem>& qa, const std::map<std::string, const EpisodeTrace*>& episodes,
    const ExternalResponderSpec& spec);

// Shell-style argv splitting for the cmd string (quotes, backslash escapes).
std::vector<std::string> split_command(const std::string& command);

}  // namespace traceqa
