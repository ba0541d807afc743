#include "traceqa/respond.hpp"

#include <csignal>
#include <cstring>
#include <mutex>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "traceqa/errors.hpp"
#include "traceqa/rng.hpp"
#include "traceqa/util.hpp"

namespace traceqa {

using nlohmann::json;

namespace {

// Matches "prefix{}suffix" or "prefix{}mid{}suffix" prompt shapes back to
// their slot contents.
struct TemplateShape {
  std::string prefix, mid, suffix;
  int slots = 0;

  static TemplateShape compile(const std::string& tmpl) {
    TemplateShape shape;
    std::size_t first = tmpl.find("{}");
    if (first == std::string::npos) {
      shape.prefix = tmpl;
      return shape;
    }
    shape.prefix = tmpl.substr(0, first);
    std::size_t second = tmpl.find("{}", first + 2);
    if (second == std::string::npos) {
      shape.slots = 1;
      shape.suffix = tmpl.substr(first + 2);
    } else {
      shape.slots = 2;
      shape.mid = tmpl.substr(first + 2, second - first - 2);
      shape.suffix = tmpl.substr(second + 2);
    }
    return shape;
  }

  std::vector<std::string> match(const std::string& prompt) const {
    if (prompt.size() < prefix.size() + suffix.size()) return {};
    if (prompt.compare(0, prefix.size(), prefix) != 0) return {};
    if (prompt.compare(prompt.size() - suffix.size(), suffix.size(), suffix) != 0) return {};
    std::string body = prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size());
    if (slots <= 1) return {body};
    std::size_t cut = body.find(mid);
    if (cut == std::string::npos) return {};
    return {body.substr(0, cut), body.substr(cut + mid.size())};
  }
};

std::string strip_article(const std::string& phrase) {
  if (phrase.rfind("an ", 0) == 0) return phrase.substr(3);
  if (phrase.rfind("a ", 0) == 0) return phrase.substr(2);
  return phrase;
}

class OracleResponder : public Responder {
 public:
  std::string answer(const QAItem& item) override { return item.answer; }
};

class ConstantResponder : public Responder {
 public:
  explicit ConstantResponder(std::string text) : text_(std::move(text)) {}
  std::string answer(const QAItem&) override { return text_; }

 private:
  std::string text_;
};

class UniformRandomResponder : public Responder {
 public:
  UniformRandomResponder(std::uint64_t seed, const CorpusStats& stats) : seed_(seed) {
    for (const auto& [action, phrase] : stats.action_phrase) phrases_.push_back(phrase);
    either_object_ = TemplateShape::compile(QuestionTemplates{}.object_either_or);
    either_action_ = TemplateShape::compile(QuestionTemplates{}.action_either_or);
  }

  std::string answer(const QAItem& item) override {
    Rng rng(seed_combine(seed_, fnv1a64(item.qa_id)));
    if (is_yes_no(item.qtype)) return rng.coin() ? "yes" : "no";
    if (item.qtype == QType::object_either_or || item.qtype == QType::action_either_or) {
      const TemplateShape& shape =
          item.qtype == QType::object_either_or ? either_object_ : either_action_;
      std::vector<std::string> options = shape.match(item.prompt);
      if (options.size() == 2) {
        const std::string& pick = options[rng.below(2)];
        return item.qtype == QType::object_either_or ? strip_article(pick) : pick;
      }
      return "";
    }
    if (is_temporal(item.qtype)) {
      if (phrases_.empty()) return "";
      return phrases_[rng.below(phrases_.size())];
    }
    return "";
  }

 private:
  std::uint64_t seed_;
  std::vector<std::string> phrases_;
  TemplateShape either_object_, either_action_;
};

class PriorResponder : public Responder {
 public:
  PriorResponder(const std::vector<QAItem>& train_qa, const CorpusStats& stats, const Lexicon& lex,
                 const QuestionTemplates& templates)
      : stats_(stats), lex_(lex) {
    std::map<QType, std::map<std::string, std::int64_t>> answer_counts;
    for (const auto& item : train_qa) answer_counts[item.qtype][item.answer]++;

    for (const auto& [t, counts] : answer_counts) {
      if (is_yes_no(t)) {
        std::int64_t yes = 0, no = 0;
        auto y = counts.find("yes");
        auto n = counts.find("no");
        if (y != counts.end()) yes = y->second;
        if (n != counts.end()) no = n->second;
        majority_[t] = yes > no ? "yes" : "no";
      } else if (is_summary(t)) {
        std::int64_t best = 0;
        for (const auto& [text, count] : counts) {
          if (count > best) {
            best = count;
            summary_[t] = text;
          }
        }
      }
    }

    either_object_ = TemplateShape::compile(templates.object_either_or);
    either_action_ = TemplateShape::compile(templates.action_either_or);
    temporal_before_ = TemplateShape::compile(templates.temporal_before);
    temporal_after_ = TemplateShape::compile(templates.temporal_after);
  }

  std::string answer(const QAItem& item) override {
    if (is_yes_no(item.qtype)) {
      auto it = majority_.find(item.qtype);
      return it == majority_.end() ? "no" : it->second;
    }
    if (is_summary(item.qtype)) {
      auto it = summary_.find(item.qtype);
      return it == summary_.end() ? "" : it->second;
    }
    if (item.qtype == QType::object_either_or) {
      std::vector<std::string> options = either_object_.match(item.prompt);
      if (options.size() != 2) return "";
      std::string a = strip_article(options[0]);
      std::string b = strip_article(options[1]);
      return object_freq(a) >= object_freq(b) ? a : b;
    }
    if (item.qtype == QType::action_either_or) {
      std::vector<std::string> options = either_action_.match(item.prompt);
      if (options.size() != 2) return "";
      return action_freq(options[0]) >= action_freq(options[1]) ? options[0] : options[1];
    }
    if (is_temporal(item.qtype)) {
      bool before = item.qtype == QType::temporal_before_simple ||
                    item.qtype == QType::temporal_before_complex;
      const TemplateShape& shape = before ? temporal_before_ : temporal_after_;
      std::vector<std::string> got = shape.match(item.prompt);
      if (got.size() == 1) {
        std::string neighbor = most_frequent_neighbor(got[0], before);
        if (!neighbor.empty()) return neighbor;
      }
      return stats_.most_frequent_action_phrase();
    }
    return "";
  }

 private:
  std::int64_t object_freq(const std::string& phrase) const {
    auto sym = lex_.symbol_for_phrase(phrase);
    if (!sym) return 0;
    auto it = stats_.object_visibility_freq.find(*sym);
    return it == stats_.object_visibility_freq.end() ? 0 : it->second;
  }

  std::int64_t action_freq(const std::string& phrase) const {
    return stats_.action_count_for_phrase(phrase);
  }

  // Best x with (x, anchor) in successor_freq for `before`, best y with
  // (anchor, y) for `after`; ties break toward the smaller phrase.
  std::string most_frequent_neighbor(const std::string& anchor, bool before) const {
    std::string best;
    std::int64_t best_count = 0;
    for (const auto& [pair, count] : stats_.successor_freq) {
      const std::string& key = before ? pair.second : pair.first;
      const std::string& candidate = before ? pair.first : pair.second;
      if (key != anchor) continue;
      if (count > best_count || (count == best_count && !best.empty() && candidate < best)) {
        best = candidate;
        best_count = count;
      }
    }
    return best;
  }

  CorpusStats stats_;  // by value: the responder outlives the caller's scope
  Lexicon lex_;
  std::map<QType, std::string> majority_;
  std::map<QType, std::string> summary_;
  TemplateShape either_object_, either_action_, temporal_before_, temporal_after_;
};

}  // namespace

std::unique_ptr<Responder> make_oracle_responder() { return std::make_unique<OracleResponder>(); }

std::unique_ptr<Responder> make_constant_responder(std::string text) {
  return std::make_unique<ConstantResponder>(std::move(text));
}

std::unique_ptr<Responder> make_uniform_random_responder(std::uint64_t seed,
                                                         const CorpusStats& stats) {
  return std::make_unique<UniformRandomResponder>(seed, stats);
}

std::unique_ptr<Responder> make_prior_responder(const std::vector<QAItem>& train_qa,
                                                const CorpusStats& stats, const Lexicon& lex,
                                                const QuestionTemplates& templates) {
  return std::make_unique<PriorResponder>(train_qa, stats, lex, templates);
}

std::map<std::string, std::string> run_responder(const std::vector<QAItem>& qa, Responder& r) {
  std::map<std::string, std::string> out;
  for (const auto& item : qa) out[item.qa_id] = r.answer(item);
  return out;
}

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> argv;
  std::string cur;
  bool in_token = false;
  std::size_t i = 0;
  while (i < command.size()) {
    char c = command[i];
    if (c == ' ' || c == '\t') {
      if (in_token) {
        argv.push_back(cur);
        cur.clear();
        in_token = false;
      }
      ++i;
    } else if (c == '\'') {
      in_token = true;
      std::size_t end = command.find('\'', i + 1);
      if (end == std::string::npos) throw UsageError("unterminated ' in command");
      cur.append(command, i + 1, end - i - 1);
      i = end + 1;
    } else if (c == '"') {
      in_token = true;
      ++i;
      while (i < command.size() && command[i] != '"') {
        if (command[i] == '\\' && i + 1 < command.size() &&
            (command[i + 1] == '"' || command[i + 1] == '\\')) {
          ++i;
        }
        cur += command[i++];
      }
      if (i >= command.size()) throw UsageError("unterminated \" in command");
      ++i;
    } else if (c == '\\' && i + 1 < command.size()) {
      in_token = true;
      cur += command[i + 1];
      i += 2;
    } else {
      in_token = true;
      cur += c;
      ++i;
    }
  }
  if (in_token) argv.push_back(cur);
  if (argv.empty()) throw UsageError("empty responder command");
  return argv;
}

namespace {

std::int64_t now_ms() {
  struct timespec ts;
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return static_cast<std::int64_t>(ts.tv_sec) * 1000 + ts.tv_nsec / 1000000;
}

// One child process with line-buffered JSON on its stdin/stdout.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv) : argv_(argv) { spawn(); }
  ~ChildProcess() { shutdown(true); }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  // Sends one request line and waits for one response line. Returns false on
  // timeout (caller records an empty answer); the child is then restarted.
  bool exchange(const std::string& request, int timeout_ms, std::string& response) {
    last_line_ = request;
    std::string line = request + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
      ssize_t n = write(in_fd_, line.data() + off, line.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("write to responder failed: " + std::string(std::strerror(errno)));
      }
      off += static_cast<std::size_t>(n);
    }

    std::int64_t deadline = now_ms() + timeout_ms;
    while (true) {
      std::size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        response = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        last_line_ = response;
        return true;
      }
      std::int64_t remaining = deadline - now_ms();
      if (remaining <= 0) {
        shutdown(true);
        spawn();
        return false;
      }
      struct pollfd pfd{out_fd_, POLLIN, 0};
      int rc = poll(&pfd, 1, static_cast<int>(remaining));
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail("poll on responder failed: " + std::string(std::strerror(errno)));
      }
      if (rc == 0) continue;  // re-check deadline
      char chunk[4096];
      ssize_t n = read(out_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("read from responder failed: " + std::string(std::strerror(errno)));
      }
      if (n == 0) fail("responder exited mid-item");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  const std::string& last_line() const { return last_line_; }

 private:
  void spawn() {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw ProtocolError("pipe failed: " + std::string(std::strerror(errno)));
    }
    pid_ = fork();
    if (pid_ < 0) throw ProtocolError("fork failed: " + std::string(std::strerror(errno)));
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> args;
      for (const auto& a : argv_) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      execvp(args[0], args.data());
      // exec failed; the parent sees EOF and raises the protocol error.
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    buffer_.clear();
  }

  void shutdown(bool kill_now) {
    if (pid_ < 0) return;
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (kill_now) kill(pid_, SIGKILL);
    int status = 0;
    for (int waited = 0; waited < 2000; waited += 10) {
      pid_t got = waitpid(pid_, &status, WNOHANG);
      if (got == pid_ || got < 0) {
        pid_ = -1;
        return;
      }
      struct timespec nap{0, 10 * 1000000};
      nanosleep(&nap, nullptr);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }

  [[noreturn]] void fail(const std::string& message) {
    std::string detail = message + " (last line: " + last_line_ + ")";
    shutdown(true);
    throw ProtocolError(detail);
  }

  std::vector<std::string> argv_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::string last_line_;
};

}  // namespace

std::map<std::string, std::string> run_external_responder(
    const std::vector<QAItem>& qa, const std::map<std::string, const EpisodeTrace*>& episodes,
    const ExternalResponderSpec& spec) {
  if (spec.workers < 1) throw UsageError("workers must be >= 1");
  if (spec.timeout_ms < 1) throw UsageError("timeout must be >= 1 ms");
  std::vector<std::string> argv = split_command(spec.command);
  signal(SIGPIPE, SIG_IGN);  // broken pipes surface as write errors instead

  std::size_t n_workers = static_cast<std::size_t>(spec.workers);
  std::vector<std::vector<const QAItem*>> shards(n_workers);
  for (const auto& item : qa) {
    shards[fnv1a64(item.qa_id) % n_workers].push_back(&item);
  }

  std::map<std::string, std::string> out;
  std::mutex mu;
  std::exception_ptr first_error;

  auto drive = [&](std::size_t shard_index) {
    try {
      ChildProcess child(argv);
      for (const QAItem* item : shards[shard_index]) {
        json request{{"id", item->qa_id},
                     {"episode_id", item->episode_id},
                     {"prompt", item->prompt},
                     {"frame_refs", json::array()}};
        auto e = episodes.find(item->episode_id);
        if (e != episodes.end()) request["frame_refs"] = e->second->frame_refs;

        std::string line;
        if (!child.exchange(request.dump(), spec.timeout_ms, line)) {
          std::lock_guard<std::mutex> lock(mu);
          out[item->qa_id] = "";
          continue;
        }
        json response = json::parse(line, nullptr, false);
        if (response.is_discarded() || !response.is_object() || !response.contains("id") ||
            !response.contains("answer")) {
          throw ProtocolError("malformed responder line: " + line);
        }
        if (response.at("id").get<std::string>() != item->qa_id) {
          throw ProtocolError("responder answered '" + response.at("id").get<std::string>() +
                              "' for request '" + item->qa_id + "' (last line: " + line + ")");
        }
        std::lock_guard<std::mutex> lock(mu);
        out[item->qa_id] = response.at("answer").get<std::string>();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!first_error) first_error = std::current_exception();
    }
  };

  if (n_workers == 1) {
    drive(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(drive, w);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace traceqa
