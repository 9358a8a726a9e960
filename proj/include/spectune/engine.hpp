#ifndef SPECTUNE_ENGINE_HPP_
#define SPECTUNE_ENGINE_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spectune/action.hpp"
#include "spectune/draft_tree.hpp"
#include "spectune/lm_sim.hpp"
#include "spectune/policy.hpp"
#include "spectune/verifier.hpp"

namespace spectune {

enum class RunMode { train, eval };

struct RunConfig {
  int max_new_tokens = 2048;  // per turn
  int cache_interval = 30;
  RunMode mode = RunMode::eval;
  std::uint64_t policy_seed = 1;  // network initialization
  std::uint64_t sample_seed = 2;  // action sampling
  // Evaluation samples at the inference temperature unless this is set.
  bool greedy_policy = false;
  // Floor applied to a step's elapsed time inside reward/rate divisions.
  double min_elapsed = 1e-6;

  void validate() const;
};

struct StepRecord {
  int question = 0;
  int turn = 0;
  int step = 0;  // within the turn
  Action action;
  int accept_len = 0;  // accepted draft tokens
  int tokens = 0;      // tokens appended: accepted + correction, cut at T_max
  TreeStats tree;
  LatencyBreakdown latency;
  bool policy_invoked = false;
  int cache_step = 0;

  double elapsed() const { return latency.total(); }
};

// Where actions come from. A source is queried once per cache interval.
class ActionSource {
 public:
  struct Choice {
    Action action;
    std::vector<double> state;  // empty for sources that ignore state
    double log_prob = 0.0;
    double value = 0.0;
  };

  virtual ~ActionSource() = default;
  virtual Choice choose(std::span<const Token> context) = 0;
  // Whether a query costs a policy forward pass in the latency model.
  virtual bool runs_policy() const { return true; }
};

class StaticActionSource final : public ActionSource {
 public:
  explicit StaticActionSource(Action action) : action_(action) {}
  Choice choose(std::span<const Token>) override { return {action_, {}, 0.0, 0.0}; }
  bool runs_policy() const override { return false; }

 private:
  Action action_;
};

// Draws from a policy network. Holds a reference, so training updates are seen
// by the next query.
class PolicyActionSource final : public ActionSource {
 public:
  PolicyActionSource(const PolicyNet& net, const StateEncoder& encoder, double temperature,
                     SampleMode mode, Rng rng);
  Choice choose(std::span<const Token> context) override;

 private:
  const PolicyNet& net_;
  const StateEncoder& encoder_;
  double temperature_;
  SampleMode mode_;
  Rng rng_;
};

// One cache interval, reported when it closes (full, or cut by the turn end).
struct IntervalRecord {
  std::span<const StepRecord> steps;
  const ActionSource::Choice* choice = nullptr;
  double reward = 0.0;
  bool done = false;  // the turn ended with this interval
  std::span<const Token> context_after;
};

struct TurnResult {
  std::vector<Token> output;
  std::vector<StepRecord> steps;
  int policy_invocations = 0;
};

using IntervalSink = std::function<void(const IntervalRecord&)>;

// Draft/verify loop for one turn. `context` already holds BOS, prompt and any
// earlier turns. Stops once T_max tokens were produced or EOS was emitted.
TurnResult generate_turn(const ModelPair& models, std::span<const Token> context,
                         ActionSource& source, const CostModel& cost, const RunConfig& run,
                         const IntervalSink& on_interval = {});

// Mean over the interval's steps of tokens / elapsed (elapsed floored at
// min_elapsed). Throws std::invalid_argument on an empty interval.
double interval_reward(std::span<const StepRecord> steps, double min_elapsed = 1e-6);

// ---------------------------------------------------------------------------
// Synthetic corpus

struct Question {
  int id = 0;
  int prompt_class = 0;
  std::vector<std::vector<Token>> turns;  // user prompts, no BOS
};

struct CorpusConfig {
  std::uint64_t seed = 11;
  int num_questions = 40;
  int turns = 1;
  int prompt_min = 4;
  int prompt_max = 12;
  // Relative weight per prompt class; empty means uniform over classes.
  std::vector<double> class_mix;
  // Offset added to question ids so that held-out suites do not reuse the
  // training seeds.
  int first_id = 0;

  void validate() const;
};

// Prompts of class c are drawn from that class's token block.
std::vector<Question> make_corpus(const ModelPair& models, const CorpusConfig& config);

// Token ids of class c, ascending.
std::vector<Token> class_tokens(const ModelPair& models, int prompt_class);

struct QuestionRun {
  std::vector<Token> output;  // all turns concatenated
  std::vector<StepRecord> steps;
  std::vector<int> turn_lengths;
  int policy_invocations = 0;
};

QuestionRun run_question(const ModelPair& models, const Question& question,
                         ActionSource& source, const CostModel& cost, const RunConfig& run,
                         const IntervalSink& on_interval = {});

// Greedy target decoding of a question turn by turn, the losslessness oracle.
std::vector<Token> greedy_reference(const ModelPair& models, const Question& question,
                                    int max_new_tokens);

// Digest of everything that must match between paired runs of a question.
std::uint64_t question_seed_digest(const ModelPair& models, const Question& question,
                                   const RunConfig& run);

// ---------------------------------------------------------------------------
// Training

struct UpdateSummary {
  int question = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  bool aborted = false;
};

struct TrainReport {
  std::vector<double> rewards;  // one per stored transition, in order
  std::vector<UpdateSummary> updates;
  int transitions = 0;
  int discarded = 0;  // transitions dropped at question boundaries
  int unique_actions = 0;
  std::map<int, int> action_counts;  // action index -> intervals
  double wall_clock_seconds = 0.0;   // not part of any deterministic artifact
};

// Single pass over the corpus. One transition per interval; PPO update when
// the buffer reaches n_steps; the buffer is cleared at question boundaries.
// Actions are sampled at temperature 1 during training.
TrainReport train(const ModelPair& models, const StateEncoder& encoder, PolicyNet& net,
                  std::span<const Question> corpus, const CostModel& cost,
                  const PPOConfig& ppo, const RunConfig& run);

// ---------------------------------------------------------------------------
// Evaluation

struct QuestionResult {
  int id = 0;
  int prompt_class = 0;
  long long tokens = 0;
  double seconds = 0.0;
  double tokens_per_second = 0.0;
  int steps = 0;
  int policy_invocations = 0;
  long long accept_len_total = 0;
  double accept_rate_mean = 0.0;
  double accept_rate_sd = 0.0;
  bool lossless = false;
  std::uint64_t seed_digest = 0;
  std::map<int, int> action_steps;  // action index -> steps
};

struct EvalReport {
  std::vector<QuestionResult> questions;
  double mean_tokens_per_second = 0.0;
  // tokens/s over t_target_base, i.e. against one target pass per token.
  double speedup_vs_autoregressive = 0.0;
  int unique_actions = 0;
  bool all_lossless = false;
  std::vector<StepRecord> steps;  // filled only when keep_steps is set
};

// Source factory: one fresh source per question so questions are independent
// and can run in parallel.
using SourceFactory = std::function<std::unique_ptr<ActionSource>(const Question&)>;

EvalReport evaluate(const ModelPair& models, std::span<const Question> suite,
                    const SourceFactory& make_source, const CostModel& cost,
                    const RunConfig& run, bool keep_steps = false, int threads = 1);

SourceFactory static_source(Action action);
// Sampling stream per question: derive_seed(run.sample_seed, question id).
SourceFactory policy_source(const PolicyNet& net, const StateEncoder& encoder,
                            const PPOConfig& ppo, const RunConfig& run);

// Runs f(i) for i in [0, n) on up to `threads` workers. Exceptions are
// rethrown on the calling thread.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

// ---------------------------------------------------------------------------
// Logs

// Header plus one row per step; doubles printed round-trip exact.
void write_step_csv(std::ostream& out, std::span<const StepRecord> steps);
// Parses what write_step_csv wrote. Throws ConfigError on malformed input.
std::vector<StepRecord> read_step_csv(std::istream& in);

}  // namespace spectune

#endif  // SPECTUNE_ENGINE_HPP_
