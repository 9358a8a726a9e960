#include "spectune/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace spectune {

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences) {
  std::vector<double> d;
  for (double x : differences) {
    if (x != 0.0) d.push_back(x);
  }
  WilcoxonResult out;
  out.n = static_cast<int>(d.size());
  if (d.empty()) return out;

  // Doubled midranks are integers, which keeps the exact path in integers.
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<int> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const auto t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    const int r2 = static_cast<int>(i + j + 2);  // (i+1) + (j+1)
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
    i = j + 1;
  }
  int w2 = 0;
  int total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0.0) w2 += rank2[i];
  }
  out.w_plus = w2 / 2.0;
  out.w_minus = (total2 - w2) / 2.0;

  if (out.n <= kWilcoxonExactMax) {
    out.exact = true;
    // counts[s]: sign assignments whose positive doubled-rank sum is s.
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    int reach = 0;
    for (int r : rank2) {
      for (int s = reach; s >= 0; --s) {
        if (counts[static_cast<std::size_t>(s)] != 0.0) {
          counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
        }
      }
      reach += r;
    }
    const double all = std::ldexp(1.0, out.n);
    double lower = 0.0;
    double upper = 0.0;
    for (int s = 0; s <= total2; ++s) {
      if (s <= w2) lower += counts[static_cast<std::size_t>(s)];
      if (s >= w2) upper += counts[static_cast<std::size_t>(s)];
    }
    out.p = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    return out;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return out;
  const double dev = std::abs(out.w_plus - mean) - 0.5;
  if (dev <= 0.0) return out;
  const double z = dev / std::sqrt(var);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("wilcoxon_signed_rank: samples differ in length");
  }
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return wilcoxon_signed_rank(diff);
}

// ---------------------------------------------------------------------------

std::vector<SweepPoint> cache_sweep(const ModelPair& models, std::span<const Question> suite,
                                    const SourceFactory& make_source, const CostModel& cost,
                                    const RunConfig& run, std::span<const int> intervals,
                                    int threads) {
  std::vector<SweepPoint> out;
  for (int n : intervals) {
    if (n < 1) throw std::invalid_argument("cache_sweep: intervals must be >= 1");
    RunConfig r = run;
    r.cache_interval = n;
    const EvalReport report = evaluate(models, suite, make_source, cost, r, true, threads);
    SweepPoint p;
    p.interval = n;
    for (const StepRecord& s : report.steps) {
      p.latency_s += s.elapsed();
      p.tokens += s.tokens;
      p.policy_seconds += s.latency.policy;
      if (s.policy_invoked) ++p.policy_invocations;
    }
    p.steps = static_cast<int>(report.steps.size());
    p.tokens_per_second = p.latency_s > 0.0 ? static_cast<double>(p.tokens) / p.latency_s : 0.0;
    out.push_back(p);
  }
  return out;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points) {
  out << "n,latency_s,tokens_per_s,tokens,steps,policy_invocations,policy_s\n";
  char buf[256];
  for (const SweepPoint& p : points) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%lld,%d,%d,%.17g\n", p.interval,
                  p.latency_s, p.tokens_per_second, p.tokens, p.steps, p.policy_invocations,
                  p.policy_seconds);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

namespace {

struct TagEntry {
  std::string_view tag;
  ProfileCategory category;
};

// Closed vocabulary. The tree-management aliases mirror how a real engine
// splits that work (construction, initialization, update, input update).
constexpr TagEntry kTags[] = {
    {"drafting_process", ProfileCategory::drafting},
    {"draft_forward", ProfileCategory::drafting},
    {"tree_construction", ProfileCategory::tree_management},
    {"tree_initialization", ProfileCategory::tree_management},
    {"tree_update", ProfileCategory::tree_management},
    {"input_update", ProfileCategory::tree_management},
    {"verification_process", ProfileCategory::verification},
    {"rl_policy_prediction", ProfileCategory::policy},
};

}  // namespace

std::string_view category_name(ProfileCategory c) {
  switch (c) {
    case ProfileCategory::drafting:
      return "Drafting";
    case ProfileCategory::tree_management:
      return "Tree Structure Management";
    case ProfileCategory::verification:
      return "Verification";
    case ProfileCategory::policy:
      return "RL Policy Prediction";
  }
  return "?";
}

ProfileCategory category_of(std::string_view tag) {
  for (const TagEntry& e : kTags) {
    if (e.tag == tag) return e.category;
  }
  throw std::invalid_argument("profile: unknown sub-event tag '" + std::string(tag) + "'");
}

std::vector<SubEvent> step_sub_events(const StepRecord& step) {
  std::vector<SubEvent> events = {
      {"drafting_process", step.latency.drafting},
      {"tree_construction", step.latency.tree_management},
      {"verification_process", step.latency.verification},
  };
  if (step.policy_invoked) events.push_back({"rl_policy_prediction", step.latency.policy});
  return events;
}

ProfileBreakdown profile(std::span<const SubEvent> events) {
  ProfileBreakdown p;
  for (const SubEvent& e : events) {
    if (!(e.seconds >= 0.0)) throw std::invalid_argument("profile: negative sub-event time");
    p.seconds[static_cast<std::size_t>(category_of(e.tag))] += e.seconds;
  }
  for (double s : p.seconds) p.total += s;
  for (std::size_t i = 0; i < p.seconds.size(); ++i) {
    p.percent[i] = p.total > 0.0 ? 100.0 * p.seconds[i] / p.total : 0.0;
  }
  return p;
}

ProfileBreakdown profile_steps(std::span<const StepRecord> steps) {
  std::vector<SubEvent> events;
  events.reserve(steps.size() * 4);
  for (const StepRecord& s : steps) {
    for (SubEvent& e : step_sub_events(s)) events.push_back(std::move(e));
  }
  return profile(events);
}

void write_profile_csv(std::ostream& out, const ProfileBreakdown& p) {
  out << "category,seconds,percent\n";
  char buf[160];
  for (int i = 0; i < kProfileCategories; ++i) {
    const auto c = static_cast<ProfileCategory>(i);
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.6f\n", std::string(category_name(c)).c_str(),
                  p.seconds[static_cast<std::size_t>(i)], p.percent[static_cast<std::size_t>(i)]);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> BenchReport::failed_checks() const {
  std::vector<std::string> failed;
  if (!lossless) failed.push_back("lossless");
  if (!seeds_match) failed.push_back("seeds_match");
  if (!(speedup_vs_baseline > 0.0 && adaptive_speedup_vs_autoregressive > 0.0 &&
        baseline_speedup_vs_autoregressive > 0.0)) {
    failed.push_back("ratios_positive");
  }
  if (!(wilcoxon.p > 0.0 && wilcoxon.p <= 1.0)) failed.push_back("p_in_range");
  return failed;
}

BenchReport compare_runs(const EvalReport& adaptive, const EvalReport& baseline,
                         std::string suite_name) {
  if (adaptive.questions.size() != baseline.questions.size()) {
    throw std::invalid_argument("compare_runs: reports cover different question counts");
  }
  BenchReport r;
  r.suite = std::move(suite_name);
  r.questions = static_cast<int>(adaptive.questions.size());
  r.seeds_match = true;
  std::vector<double> a, b;
  double rate_sum = 0.0;
  for (std::size_t i = 0; i < adaptive.questions.size(); ++i) {
    const QuestionResult& x = adaptive.questions[i];
    const QuestionResult& y = baseline.questions[i];
    if (x.id != y.id) throw std::invalid_argument("compare_runs: question order differs");
    r.seeds_match = r.seeds_match && x.seed_digest == y.seed_digest;
    a.push_back(x.tokens_per_second);
    b.push_back(y.tokens_per_second);
    rate_sum += x.accept_rate_mean;
    r.accept_len_total += x.accept_len_total;
  }
  r.adaptive_tokens_per_second = adaptive.mean_tokens_per_second;
  r.baseline_tokens_per_second = baseline.mean_tokens_per_second;
  r.speedup_vs_baseline = baseline.mean_tokens_per_second > 0.0
                              ? adaptive.mean_tokens_per_second / baseline.mean_tokens_per_second
                              : 0.0;
  r.adaptive_speedup_vs_autoregressive = adaptive.speedup_vs_autoregressive;
  r.baseline_speedup_vs_autoregressive = baseline.speedup_vs_autoregressive;
  r.wilcoxon = wilcoxon_signed_rank(a, b);
  if (r.questions > 0) {
    r.accept_rate_mean = rate_sum / r.questions;
    double ss = 0.0;
    for (const QuestionResult& q : adaptive.questions) {
      ss += (q.accept_rate_mean - r.accept_rate_mean) * (q.accept_rate_mean - r.accept_rate_mean);
    }
    r.accept_rate_sd = r.questions > 1 ? std::sqrt(ss / (r.questions - 1)) : 0.0;
  }
  r.unique_actions = adaptive.unique_actions;
  r.lossless = adaptive.all_lossless && baseline.all_lossless;
  return r;
}

// ---------------------------------------------------------------------------

std::string AblationConfig::name() const {
  std::string s = variant == PpoVariant::standard ? "standard" : "max-entropy";
  s += encoder == EncoderKind::feature_vector ? "/feature-vector" : "/text-embedding";
  s += "/[" + std::to_string(hidden) + "," + std::to_string(hidden) + "]";
  return s;
}

std::vector<AblationConfig> default_ablation_grid() {
  std::vector<AblationConfig> grid;
  for (PpoVariant v : {PpoVariant::standard, PpoVariant::max_entropy}) {
    for (EncoderKind e : {EncoderKind::context_embedding, EncoderKind::feature_vector}) {
      for (int h : {64, 128}) grid.push_back({v, e, h});
    }
  }
  return grid;
}

std::vector<AblationRow> compare_ablations(const AblationSetup& setup,
                                           std::span<const AblationConfig> configs) {
  if (setup.models == nullptr) throw std::invalid_argument("compare_ablations: no models");
  const ModelPair& models = *setup.models;
  const EvalReport baseline = evaluate(models, setup.eval_suite, static_source(setup.baseline),
                                       setup.cost, setup.eval_run, false, setup.threads);
  std::vector<AblationRow> rows;
  for (const AblationConfig& c : configs) {
    FeatureSpec spec = setup.features;
    spec.kind = c.encoder;
    const StateEncoder encoder(spec, models.vocab_size(), models.context_order());
    const PPOConfig ppo =
        c.variant == PpoVariant::standard ? PPOConfig::standard() : PPOConfig::max_entropy();
    PolicyNet net(encoder.state_dim(), c.hidden, setup.train_run.policy_seed);
    train(models, encoder, net, setup.train_corpus, setup.cost, ppo, setup.train_run);
    const EvalReport eval =
        evaluate(models, setup.eval_suite, policy_source(net, encoder, ppo, setup.eval_run),
                 setup.cost, setup.eval_run, false, setup.threads);
    const BenchReport cmp = compare_runs(eval, baseline, c.name());
    // Unique actions are counted on the sampled policy; argmax hides its spread.
    int unique = eval.unique_actions;
    if (setup.eval_run.greedy_policy) {
      RunConfig sampled = setup.eval_run;
      sampled.greedy_policy = false;
      unique = evaluate(models, setup.eval_suite, policy_source(net, encoder, ppo, sampled),
                        setup.cost, sampled, false, setup.threads)
                   .unique_actions;
    }
    rows.push_back({c, eval.mean_tokens_per_second, cmp.speedup_vs_baseline, unique,
                    cmp.wilcoxon.p});
  }
  return rows;
}

void write_ablation_table(std::ostream& out, std::span<const AblationRow> rows) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %-15s %-10s %10s %9s %7s %9s\n", "algorithm",
                "state", "hidden", "tokens/s", "speedup", "unique", "p");
  out << buf;
  for (const AblationRow& r : rows) {
    const std::string hidden =
        "[" + std::to_string(r.config.hidden) + "," + std::to_string(r.config.hidden) + "]";
    std::snprintf(buf, sizeof(buf), "%-12s %-15s %-10s %10.2f %8.4fx %7d %9.3g\n",
                  r.config.variant == PpoVariant::standard ? "standard" : "max-entropy",
                  r.config.encoder == EncoderKind::feature_vector ? "feature-vector"
                                                                  : "text-embedding",
                  hidden.c_str(), r.tokens_per_second, r.speedup_vs_baseline, r.unique_actions,
                  r.wilcoxon_p);
    out << buf;
  }
}

}  // namespace spectune
