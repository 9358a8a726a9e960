#include "spectune/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "spectune/errors.hpp"

namespace spectune {

namespace {

constexpr std::uint64_t kCorpusStream = 0x636f72707573ULL;
constexpr std::uint64_t kEvalSampleStream = 0x6576616cULL;
constexpr std::uint64_t kTrainSampleStream = 0x747261696eULL;
constexpr std::uint64_t kMinibatchSeed = 0x6d696e69ULL;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

void RunConfig::validate() const {
  if (max_new_tokens < 1) throw ConfigError("run: max_new_tokens must be >= 1");
  if (cache_interval < 1) throw ConfigError("run: cache_interval must be >= 1");
  if (!(min_elapsed > 0.0)) throw ConfigError("run: min_elapsed must be > 0");
}

PolicyActionSource::PolicyActionSource(const PolicyNet& net, const StateEncoder& encoder,
                                       double temperature, SampleMode mode, Rng rng)
    : net_(net), encoder_(encoder), temperature_(temperature), mode_(mode), rng_(rng) {
  if (net.state_dim() != encoder.state_dim()) {
    throw std::invalid_argument("policy input dimension " + std::to_string(net.state_dim()) +
                                " does not match state dimension " +
                                std::to_string(encoder.state_dim()));
  }
}

ActionSource::Choice PolicyActionSource::choose(std::span<const Token> context) {
  Choice c;
  c.state = encoder_.extract(context);
  const PolicyDecision d = policy_forward(net_, c.state, temperature_, mode_, &rng_);
  c.action = d.action;
  c.log_prob = d.log_prob;
  c.value = d.value;
  return c;
}

double interval_reward(std::span<const StepRecord> steps, double min_elapsed) {
  if (steps.empty()) throw std::invalid_argument("interval_reward: empty interval");
  double sum = 0.0;
  for (const StepRecord& s : steps) sum += s.tokens / std::max(s.elapsed(), min_elapsed);
  return sum / static_cast<double>(steps.size());
}

TurnResult generate_turn(const ModelPair& models, std::span<const Token> context,
                         ActionSource& source, const CostModel& cost, const RunConfig& run,
                         const IntervalSink& on_interval) {
  run.validate();
  std::vector<Token> ctx(context.begin(), context.end());
  std::size_t bucket = models.bucket_of(ctx);  // validates every token once

  const bool wallclock = cost.mode == CostMode::wallclock;
  const Token eos = models.config().eos_token;
  TurnResult out;
  ActionCache cache;
  ActionSource::Choice current;
  std::size_t interval_start = 0;
  bool finished = false;

  while (!finished) {
    StepRecord rec;
    rec.step = static_cast<int>(out.steps.size());

    Clock::time_point t0 = Clock::now();
    const ActionCache::Selection sel = cache.select([&] {
      current = source.choose(ctx);
      return current.action;
    });
    const double policy_wall = seconds_since(t0);
    if (sel.policy_invoked) {
      interval_start = out.steps.size();
      if (source.runs_policy()) ++out.policy_invocations;
    }
    rec.action = sel.action;
    rec.policy_invoked = sel.policy_invoked && source.runs_policy();
    rec.cache_step = sel.cache_step;

    t0 = Clock::now();
    const DraftTree tree = build_tree_at(models, bucket, sel.action);
    const double draft_wall = seconds_since(t0);
    t0 = Clock::now();
    const std::vector<int> candidates =
        rerank(tree, static_cast<std::size_t>(sel.action.tt));
    const double tree_wall = seconds_since(t0);
    t0 = Clock::now();
    const VerifyResult v = verify_greedy_tree_at(models, tree, candidates);
    const double verify_wall = seconds_since(t0);

    rec.accept_len = v.accept_len;
    rec.tree = tree.stats(static_cast<int>(candidates.size()));
    if (wallclock) {
      rec.latency = {draft_wall, tree_wall, verify_wall, rec.policy_invoked ? policy_wall : 0.0};
    } else {
      rec.latency = simulate_step_latency(cost, sel.action, rec.tree, rec.policy_invoked);
    }

    auto emit = [&](Token t) {
      if (finished) return;
      ctx.push_back(t);
      bucket = models.extend(bucket, t);
      out.output.push_back(t);
      ++rec.tokens;
      if (t == eos || static_cast<int>(out.output.size()) >= run.max_new_tokens) finished = true;
    };
    for (Token t : v.accepted) emit(t);
    emit(v.correction);

    out.steps.push_back(rec);
    const bool interval_full = cache.end_step(run.cache_interval);
    if ((interval_full || finished) && on_interval) {
      IntervalRecord iv;
      iv.steps = std::span<const StepRecord>(out.steps).subspan(interval_start);
      iv.choice = &current;
      iv.reward = interval_reward(iv.steps, run.min_elapsed);
      iv.done = finished;
      iv.context_after = ctx;
      on_interval(iv);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void CorpusConfig::validate() const {
  if (num_questions < 1) throw ConfigError("corpus: num_questions must be >= 1");
  if (turns < 1) throw ConfigError("corpus: turns must be >= 1");
  if (prompt_min < 1 || prompt_max < prompt_min) {
    throw ConfigError("corpus: need 1 <= prompt_min <= prompt_max");
  }
  for (double w : class_mix) {
    if (!(w >= 0.0)) throw ConfigError("corpus: class_mix weights must be >= 0");
  }
  if (!class_mix.empty() &&
      !(std::accumulate(class_mix.begin(), class_mix.end(), 0.0) > 0.0)) {
    throw ConfigError("corpus: class_mix has no positive weight");
  }
}

std::vector<Token> class_tokens(const ModelPair& models, int prompt_class) {
  std::vector<Token> out;
  for (Token t = 1; t < models.vocab_size(); ++t) {
    if (models.token_class(t) == prompt_class) out.push_back(t);
  }
  return out;
}

std::vector<Question> make_corpus(const ModelPair& models, const CorpusConfig& config) {
  config.validate();
  const int classes = models.config().num_classes();
  std::vector<double> mix = config.class_mix;
  if (mix.empty()) mix.assign(static_cast<std::size_t>(classes), 1.0);
  if (static_cast<int>(mix.size()) != classes) {
    throw ConfigError("corpus: class_mix has " + std::to_string(mix.size()) +
                      " entries but the model has " + std::to_string(classes) + " classes");
  }
  std::vector<std::vector<Token>> blocks;
  for (int c = 0; c < classes; ++c) blocks.push_back(class_tokens(models, c));

  std::vector<Question> corpus;
  for (int i = 0; i < config.num_questions; ++i) {
    Question q;
    q.id = config.first_id + i;
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(q.id)), kCorpusStream);
    RngChoiceSource pick(Rng(derive_seed(config.seed, static_cast<std::uint64_t>(q.id)),
                             kCorpusStream + 1));
    q.prompt_class = static_cast<int>(pick.categorical(mix));
    const auto& block = blocks[static_cast<std::size_t>(q.prompt_class)];
    for (int t = 0; t < config.turns; ++t) {
      const auto span = static_cast<std::size_t>(config.prompt_max - config.prompt_min + 1);
      const int len = config.prompt_min + static_cast<int>(rng.below(span));
      std::vector<Token> prompt;
      for (int j = 0; j < len; ++j) prompt.push_back(block[rng.below(block.size())]);
      q.turns.push_back(std::move(prompt));
    }
    corpus.push_back(std::move(q));
  }
  return corpus;
}

QuestionRun run_question(const ModelPair& models, const Question& question,
                         ActionSource& source, const CostModel& cost, const RunConfig& run,
                         const IntervalSink& on_interval) {
  QuestionRun out;
  std::vector<Token> ctx = {kBosToken};
  for (std::size_t turn = 0; turn < question.turns.size(); ++turn) {
    const auto& prompt = question.turns[turn];
    ctx.insert(ctx.end(), prompt.begin(), prompt.end());
    TurnResult r = generate_turn(models, ctx, source, cost, run, on_interval);
    for (StepRecord& s : r.steps) {
      s.question = question.id;
      s.turn = static_cast<int>(turn);
    }
    ctx.insert(ctx.end(), r.output.begin(), r.output.end());
    out.output.insert(out.output.end(), r.output.begin(), r.output.end());
    out.steps.insert(out.steps.end(), r.steps.begin(), r.steps.end());
    out.turn_lengths.push_back(static_cast<int>(r.output.size()));
    out.policy_invocations += r.policy_invocations;
  }
  return out;
}

std::vector<Token> greedy_reference(const ModelPair& models, const Question& question,
                                    int max_new_tokens) {
  std::vector<Token> ctx = {kBosToken};
  std::vector<Token> out;
  for (const auto& prompt : question.turns) {
    ctx.insert(ctx.end(), prompt.begin(), prompt.end());
    const std::vector<Token> gen = greedy_decode(models, ctx, max_new_tokens);
    ctx.insert(ctx.end(), gen.begin(), gen.end());
    out.insert(out.end(), gen.begin(), gen.end());
  }
  return out;
}

std::uint64_t question_seed_digest(const ModelPair& models, const Question& question,
                                   const RunConfig& run) {
  const ModelConfig& m = models.config();
  std::ostringstream s;
  s << m.seed << '/' << m.vocab_size << '/' << m.context_order << '/' << run.max_new_tokens
    << '/' << question.id;
  for (const auto& turn : question.turns) {
    s << '|';
    for (Token t : turn) s << t << ',';
  }
  return fnv1a64(s.str());
}

// ---------------------------------------------------------------------------

TrainReport train(const ModelPair& models, const StateEncoder& encoder, PolicyNet& net,
                  std::span<const Question> corpus, const CostModel& cost,
                  const PPOConfig& ppo, const RunConfig& run) {
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  ppo.validate();
  run.validate();
  const Clock::time_point start = Clock::now();

  TrainReport report;
  PpoTrainer trainer(net, ppo, derive_seed(run.policy_seed, kMinibatchSeed));
  PolicyActionSource source(net, encoder, 1.0, SampleMode::sample,
                            Rng(run.sample_seed, kTrainSampleStream));
  std::vector<Transition> buffer;
  std::set<int> seen;
  int question_id = 0;

  const IntervalSink sink = [&](const IntervalRecord& iv) {
    const ActionSource::Choice& c = *iv.choice;
    buffer.push_back({c.state, c.action.index, c.log_prob, c.value, iv.reward, iv.done});
    report.rewards.push_back(iv.reward);
    ++report.transitions;
    ++report.action_counts[c.action.index];
    seen.insert(c.action.index);
    if (static_cast<int>(buffer.size()) < ppo.n_steps) return;
    const double bootstrap =
        iv.done ? 0.0 : net.critic.forward(encoder.extract(iv.context_after))[0];
    const UpdateReport u = trainer.update(buffer, bootstrap);
    report.updates.push_back({question_id, u.objective_before, u.objective_after,
                              u.last.value_loss, u.last.entropy, u.last.approx_kl, u.aborted});
    buffer.clear();
  };

  RunConfig train_run = run;
  train_run.mode = RunMode::train;
  for (const Question& q : corpus) {
    question_id = q.id;
    run_question(models, q, source, cost, train_run, sink);
    report.discarded += static_cast<int>(buffer.size());
    buffer.clear();
  }
  report.unique_actions = static_cast<int>(seen.size());
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

EvalReport evaluate(const ModelPair& models, std::span<const Question> suite,
                    const SourceFactory& make_source, const CostModel& cost,
                    const RunConfig& run, bool keep_steps, int threads) {
  run.validate();
  std::vector<QuestionResult> results(suite.size());
  std::vector<std::vector<StepRecord>> steps(suite.size());

  parallel_for(static_cast<int>(suite.size()), threads, [&](int i) {
    const Question& q = suite[static_cast<std::size_t>(i)];
    std::unique_ptr<ActionSource> source = make_source(q);
    QuestionRun r = run_question(models, q, *source, cost, run);

    QuestionResult& res = results[static_cast<std::size_t>(i)];
    res.id = q.id;
    res.prompt_class = q.prompt_class;
    res.steps = static_cast<int>(r.steps.size());
    res.policy_invocations = r.policy_invocations;
    res.lossless = r.output == greedy_reference(models, q, run.max_new_tokens);
    res.seed_digest = question_seed_digest(models, q, run);
    std::vector<VerifyResult> verify(r.steps.size());
    std::vector<double> elapsed(r.steps.size());
    for (std::size_t s = 0; s < r.steps.size(); ++s) {
      const StepRecord& rec = r.steps[s];
      res.tokens += rec.tokens;
      res.seconds += rec.elapsed();
      res.accept_len_total += rec.accept_len;
      ++res.action_steps[rec.action.index];
      verify[s].accept_len = rec.accept_len;
      verify[s].candidates_checked = rec.tree.candidates;
      elapsed[s] = rec.elapsed();
    }
    const AcceptStats st = accept_stats(verify, elapsed);
    res.accept_rate_mean = st.rate_mean;
    res.accept_rate_sd = st.rate_sd;
    res.tokens_per_second =
        static_cast<double>(res.tokens) / std::max(res.seconds, run.min_elapsed);
    if (keep_steps) steps[static_cast<std::size_t>(i)] = std::move(r.steps);
  });

  EvalReport report;
  report.all_lossless = true;
  std::set<int> seen;
  double sum = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    sum += results[i].tokens_per_second;
    report.all_lossless = report.all_lossless && results[i].lossless;
    for (const auto& [a, n] : results[i].action_steps) seen.insert(a);
    if (keep_steps) report.steps.insert(report.steps.end(), steps[i].begin(), steps[i].end());
  }
  report.questions = std::move(results);
  report.mean_tokens_per_second =
      report.questions.empty() ? 0.0 : sum / static_cast<double>(report.questions.size());
  report.speedup_vs_autoregressive = report.mean_tokens_per_second * cost.t_target_base;
  report.unique_actions = static_cast<int>(seen.size());
  return report;
}

SourceFactory static_source(Action action) {
  return [action](const Question&) { return std::make_unique<StaticActionSource>(action); };
}

SourceFactory policy_source(const PolicyNet& net, const StateEncoder& encoder,
                            const PPOConfig& ppo, const RunConfig& run) {
  const double temperature = ppo.inference_temperature;
  const SampleMode mode = run.greedy_policy ? SampleMode::greedy : SampleMode::sample;
  const std::uint64_t seed = run.sample_seed;
  return [&net, &encoder, temperature, mode, seed](const Question& q) {
    return std::make_unique<PolicyActionSource>(
        net, encoder, temperature, mode,
        Rng(derive_seed(seed, static_cast<std::uint64_t>(q.id)), kEvalSampleStream));
  };
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kStepHeader =
    "question,turn,step,tt,d,k,accept_len,tokens,layers,expanded,nodes,candidates,"
    "drafting,tree_management,verification,policy,elapsed,policy_invoked,cache_step";

std::string exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_step_csv(std::ostream& out, std::span<const StepRecord> steps) {
  out << kStepHeader << '\n';
  for (const StepRecord& s : steps) {
    out << s.question << ',' << s.turn << ',' << s.step << ',' << s.action.tt << ','
        << s.action.d << ',' << s.action.k << ',' << s.accept_len << ',' << s.tokens << ','
        << s.tree.layers << ',' << s.tree.expanded << ',' << s.tree.nodes << ','
        << s.tree.candidates << ',' << exact(s.latency.drafting) << ','
        << exact(s.latency.tree_management) << ',' << exact(s.latency.verification) << ','
        << exact(s.latency.policy) << ',' << exact(s.elapsed()) << ','
        << (s.policy_invoked ? 1 : 0) << ',' << s.cache_step << '\n';
  }
}

std::vector<StepRecord> read_step_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kStepHeader) {
    throw ConfigError("step log: missing or unexpected header");
  }
  std::vector<StepRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 19) {
      throw ConfigError("step log: line " + std::to_string(line_no) + " has " +
                        std::to_string(f.size()) + " fields");
    }
    auto i = [&](int k) { return std::stoi(f[static_cast<std::size_t>(k)]); };
    auto d = [&](int k) { return std::strtod(f[static_cast<std::size_t>(k)].c_str(), nullptr); };
    StepRecord s;
    s.question = i(0);
    s.turn = i(1);
    s.step = i(2);
    const auto found = find_action(i(3), i(4), i(5));
    s.action = found ? *found : Action{i(3), i(4), i(5), -1};
    s.accept_len = i(6);
    s.tokens = i(7);
    s.tree = {i(8), i(9), i(10), i(11)};
    s.latency = {d(12), d(13), d(14), d(15)};
    s.policy_invoked = i(17) != 0;
    s.cache_step = i(18);
    out.push_back(s);
  }
  return out;
}

}  // namespace spectune
