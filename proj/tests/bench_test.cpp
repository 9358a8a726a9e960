#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "spectune/bench.hpp"
#include "spectune/config.hpp"
#include "spectune/rng.hpp"
#include "test_util.hpp"

namespace spectune {
namespace {

// Brute force: every one of the 2^n sign assignments, midranks computed by
// scanning all pairs. Returns the two-sided p.
double enumerate_p(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0.0) d.push_back(x);
  }
  const int n = static_cast<int>(d.size());
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (int i = 0; i < n; ++i) {
    int below = 0, same = 0;
    for (int j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++below;
      if (std::abs(d[j]) == std::abs(d[i])) ++same;
    }
    rank[i] = below + (same + 1) / 2.0;
  }
  double observed = 0.0;
  for (int i = 0; i < n; ++i) {
    if (d[i] > 0.0) observed += rank[i];
  }
  long long lo = 0, hi = 0;
  const long long total = 1LL << n;
  for (long long mask = 0; mask < total; ++mask) {
    double w = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mask >> i & 1) w += rank[i];
    }
    if (w <= observed + 1e-9) ++lo;
    if (w >= observed - 1e-9) ++hi;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lo, hi)) / static_cast<double>(total));
}

std::vector<double> random_diffs(Rng& rng, int n, bool ties) {
  std::vector<double> d(static_cast<std::size_t>(n));
  for (double& x : d) {
    // Coarse values force ties and the occasional zero.
    x = ties ? static_cast<double>(static_cast<int>(rng.below(9)) - 4)
             : rng.uniform(-1.0, 1.0) + 0.3;
  }
  return d;
}

TEST(Wilcoxon, AllEqualPairsGiveOne) {
  const std::vector<double> a = {1.0, 2.0, 3.0}, b = a;
  const WilcoxonResult r = wilcoxon_signed_rank(a, b);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_EQ(r.n, 0);
  EXPECT_EQ(wilcoxon_signed_rank(std::vector<double>{}).p, 1.0);
}

TEST(Wilcoxon, FiveAllPositive) {
  const std::vector<double> d = {0.5, 1.2, 0.1, 3.0, 2.2};
  const WilcoxonResult r = wilcoxon_signed_rank(d);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.n, 5);
  EXPECT_DOUBLE_EQ(r.w_plus, 15.0);
  EXPECT_DOUBLE_EQ(r.p, 0.0625);
  EXPECT_DOUBLE_EQ(enumerate_p(d), 0.0625);
  std::vector<double> neg = d;
  for (double& x : neg) x = -x;
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(neg).p, 0.0625);
}

TEST(Wilcoxon, ExactPathMatchesEnumeration) {
  Rng rng(2024);
  int checked = 0;
  for (int n = 1; n <= kWilcoxonExactMax; ++n) {
    for (int rep = 0; rep < 25; ++rep) {
      const auto d = random_diffs(rng, n, rep % 2 == 0);
      const WilcoxonResult r = wilcoxon_signed_rank(d);
      const double want = enumerate_p(d);
      ASSERT_NEAR(r.p, want, 1e-12) << "n=" << n << " rep=" << rep;
      if (r.n > 0) {
        EXPECT_TRUE(r.exact);
        EXPECT_GT(r.p, 0.0);
      }
      EXPECT_LE(r.p, 1.0);
      EXPECT_DOUBLE_EQ(r.w_plus + r.w_minus, r.n * (r.n + 1) / 2.0);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 300);
}

TEST(Wilcoxon, ZerosAreDropped) {
  const std::vector<double> with = {0.0, 1.0, -2.0, 0.0, 3.0, 4.0};
  const std::vector<double> without = {1.0, -2.0, 3.0, 4.0};
  EXPECT_EQ(wilcoxon_signed_rank(with).n, 4);
  EXPECT_EQ(wilcoxon_signed_rank(with).p, wilcoxon_signed_rank(without).p);
}

TEST(Wilcoxon, NormalApproximationTracksExactAtTwenty) {
  Rng rng(77);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      a[i] = rng.uniform(0.0, 1.0);
      b[i] = rng.uniform(0.0, 1.0) - 0.15;
    }
    const WilcoxonResult r = wilcoxon_signed_rank(a, b);
    EXPECT_FALSE(r.exact);
    std::vector<double> d(20);
    for (int i = 0; i < 20; ++i) d[i] = a[i] - b[i];
    EXPECT_NEAR(r.p, enumerate_p(d), 0.02) << "rep " << rep;
  }
}

TEST(Wilcoxon, LengthMismatchThrows) {
  const std::vector<double> a = {1.0, 2.0}, b = {1.0};
  EXPECT_THROW(wilcoxon_signed_rank(a, b), std::invalid_argument);
}

// ---------------------------------------------------------------------------

class BenchTest : public ::testing::Test {
 protected:
  BenchTest() : models_(testing::two_regime_model()) {}

  std::vector<Question> suite(int n, int turns = 1) const {
    CorpusConfig c;
    c.seed = 31;
    c.num_questions = n;
    c.turns = turns;
    return make_corpus(models_, c);
  }
  static RunConfig run(int t_max) {
    RunConfig r;
    r.max_new_tokens = t_max;
    return r;
  }

  ModelPair models_;
};

// Answers with one action, charged as a policy.
SourceFactory constant_policy(Action a) {
  class Src final : public ActionSource {
   public:
    explicit Src(Action a) : a_(a) {}
    Choice choose(std::span<const Token>) override { return {a_, {}, 0.0, 0.0}; }

   private:
    Action a_;
  };
  return [a](const Question&) { return std::make_unique<Src>(a); };
}

TEST_F(BenchTest, FreePolicyMakesCacheIrrelevant) {
  CostModel cost;
  cost.t_policy = 0.0;
  const auto qs = suite(6, 2);
  const std::vector<int> ns = {1, 5, 10, 20, 30, 50};
  const auto pts = cache_sweep(models_, qs, constant_policy(*find_action(64, 6, 16)), cost,
                               run(300), ns);
  ASSERT_EQ(pts.size(), ns.size());
  for (const SweepPoint& p : pts) {
    EXPECT_EQ(p.latency_s, pts[0].latency_s) << "N=" << p.interval;
    EXPECT_EQ(p.tokens, pts[0].tokens);
    EXPECT_EQ(p.policy_seconds, 0.0);
  }
}

TEST_F(BenchTest, InvocationCounts) {
  const auto qs = suite(5, 2);
  const RunConfig r = run(400);
  const Action a = *find_action(48, 5, 8);
  const std::vector<int> ns = {1, 50};
  const auto pts = cache_sweep(models_, qs, constant_policy(a), CostModel{}, r, ns);
  EXPECT_EQ(pts[0].policy_invocations, pts[0].steps);

  // Steps per turn from an independent run with a static action.
  int want = 0;
  for (const Question& q : qs) {
    StaticActionSource src(a);
    const QuestionRun qr = run_question(models_, q, src, CostModel{}, r);
    std::map<int, int> per_turn;
    for (const StepRecord& s : qr.steps) ++per_turn[s.turn];
    for (const auto& [turn, steps] : per_turn) want += (steps + 49) / 50;
  }
  EXPECT_EQ(pts[1].policy_invocations, want);
  EXPECT_EQ(pts[1].steps, pts[0].steps);
  EXPECT_DOUBLE_EQ(pts[1].policy_seconds, want * CostModel{}.t_policy);
}

TEST_F(BenchTest, PolicyTimeFallsWithInterval) {
  const auto qs = suite(6);
  const FeatureSpec spec;
  const StateEncoder enc(spec, models_.vocab_size(), models_.context_order());
  const PolicyNet net(enc.state_dim(), 128, 3);
  RunConfig r = run(600);
  const std::vector<int> ns = {1, 5, 10, 20, 30, 50};
  const auto pts =
      cache_sweep(models_, qs, policy_source(net, enc, PPOConfig::max_entropy(), r), CostModel{},
                  r, ns);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LT(pts[i].policy_seconds, pts[i - 1].policy_seconds) << "N=" << pts[i].interval;
  }
  for (const SweepPoint& p : pts) {
    const double want = p.policy_invocations * CostModel{}.t_policy;
    EXPECT_NEAR(p.policy_seconds, want, 1e-12 * want);
  }
}

TEST_F(BenchTest, SweepCsvHasOneRowPerPoint) {
  const auto qs = suite(2);
  const std::vector<int> ns = {1, 5, 10};
  const auto pts = cache_sweep(models_, qs, constant_policy(*find_action(64, 6, 16)),
                               CostModel{}, run(100), ns);
  std::ostringstream out;
  write_sweep_csv(out, pts);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,latency_s,tokens_per_s,tokens,steps,policy_invocations,policy_s");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(line.substr(0, line.find(',')), std::to_string(ns[rows]));
    ++rows;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_THROW(cache_sweep(models_, qs, constant_policy(*find_action(64, 6, 16)), CostModel{},
                           run(100), std::vector<int>{0}),
               std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST(Profile, OnlyDraftingIsAllDrafting) {
  const std::vector<SubEvent> ev = {{"drafting_process", 0.3}, {"draft_forward", 0.2},
                                    {"tree_update", 0.0}, {"verification_process", 0.0}};
  const ProfileBreakdown p = profile(ev);
  EXPECT_DOUBLE_EQ(p.percent[0], 100.0);
  EXPECT_DOUBLE_EQ(p.total, 0.5);
}

TEST(Profile, TreeTagsShareOneCategory) {
  for (const char* tag :
       {"tree_construction", "tree_initialization", "tree_update", "input_update"}) {
    EXPECT_EQ(category_of(tag), ProfileCategory::tree_management) << tag;
  }
  EXPECT_EQ(category_of("rl_policy_prediction"), ProfileCategory::policy);
  EXPECT_EQ(category_of("verification_process"), ProfileCategory::verification);
  EXPECT_THROW(category_of("kv_cache"), std::invalid_argument);
  const std::vector<SubEvent> bad = {{"drafting_process", 1.0}, {"gpu_idle", 1.0}};
  EXPECT_THROW(profile(bad), std::invalid_argument);
  const std::vector<SubEvent> neg = {{"drafting_process", -1.0}};
  EXPECT_THROW(profile(neg), std::invalid_argument);
}

TEST_F(BenchTest, DefaultRunProfile) {
  const auto qs = suite(8);
  RunConfig r = run(512);
  r.cache_interval = 30;
  const EvalReport rep =
      evaluate(models_, qs, constant_policy(*find_action(64, 6, 16)), CostModel{}, r, true);
  const ProfileBreakdown p = profile_steps(rep.steps);
  double pct = 0.0, secs = 0.0, elapsed = 0.0;
  for (int i = 0; i < kProfileCategories; ++i) {
    pct += p.percent[i];
    secs += p.seconds[i];
  }
  for (const StepRecord& s : rep.steps) elapsed += s.elapsed();
  EXPECT_NEAR(pct, 100.0, 0.1);
  EXPECT_NEAR(secs, elapsed, 1e-9 * elapsed);
  EXPECT_DOUBLE_EQ(secs, p.total);
  EXPECT_GT(p.percent[3], 0.0);
  EXPECT_LT(p.percent[3], 1.0);
  for (int i = 0; i < 3; ++i) EXPECT_GT(p.percent[i], 1.0);

  // Recount the policy share from invocation counts and the cost constant.
  int invoked = 0;
  for (const StepRecord& s : rep.steps) invoked += s.policy_invoked;
  EXPECT_DOUBLE_EQ(p.seconds[3], invoked * CostModel{}.t_policy);

  std::ostringstream csv;
  write_profile_csv(csv, p);
  EXPECT_NE(csv.str().find("RL Policy Prediction,"), std::string::npos);
}

TEST_F(BenchTest, PercentagesSumOnRandomCosts) {
  Rng rng(5);
  const auto qs = suite(2);
  for (int rep = 0; rep < 20; ++rep) {
    CostModel c;
    c.t_target_base = rng.uniform(0.0, 0.05);
    c.t_target_per_token = rng.uniform(0.0, 1e-4);
    c.t_draft_base = rng.uniform(0.0, 0.01);
    c.t_draft_per_node = rng.uniform(0.0, 1e-4);
    c.t_policy = rng.uniform(0.0, 0.01);
    c.t_tree_mgmt_per_node = rng.uniform(0.0, 1e-4);
    RunConfig r = run(100);
    r.cache_interval = 1 + static_cast<int>(rng.below(10));
    const EvalReport e =
        evaluate(models_, qs, constant_policy(*find_action(32, 4, 8)), c, r, true);
    const ProfileBreakdown p = profile_steps(e.steps);
    double pct = 0.0;
    for (double x : p.percent) pct += x;
    EXPECT_NEAR(pct, 100.0, 0.1) << "rep " << rep;
  }
}

// ---------------------------------------------------------------------------

TEST_F(BenchTest, CompareIdenticalRuns) {
  const auto qs = suite(6);
  const SourceFactory src = static_source(*find_action(64, 6, 16));
  const EvalReport a = evaluate(models_, qs, src, CostModel{}, run(200));
  const BenchReport r = compare_runs(a, a, "same");
  EXPECT_DOUBLE_EQ(r.speedup_vs_baseline, 1.0);
  EXPECT_EQ(r.wilcoxon.p, 1.0);
  EXPECT_TRUE(r.seeds_match);
  EXPECT_TRUE(r.lossless);
  EXPECT_TRUE(r.failed_checks().empty());
  EXPECT_EQ(r.unique_actions, 1);
  EXPECT_EQ(r.questions, 6);
}

TEST_F(BenchTest, CompareDetectsDifferentWorkloads) {
  const auto qs = suite(6);
  const RunConfig r = run(200);
  const EvalReport big = evaluate(models_, qs, static_source(*find_action(64, 6, 16)),
                                  CostModel{}, r);
  const EvalReport tiny = evaluate(models_, qs, static_source(*find_action(32, 3, 8)),
                                   CostModel{}, r);
  const BenchReport c = compare_runs(big, tiny, "x");
  EXPECT_TRUE(c.seeds_match);
  EXPECT_NEAR(c.speedup_vs_baseline, big.mean_tokens_per_second / tiny.mean_tokens_per_second,
              1e-15);
  EXPECT_GT(c.wilcoxon.p, 0.0);
  EXPECT_LE(c.wilcoxon.p, 1.0);

  RunConfig other = r;
  other.max_new_tokens = 150;
  const EvalReport shorter = evaluate(models_, qs, static_source(*find_action(64, 6, 16)),
                                      CostModel{}, other);
  EXPECT_FALSE(compare_runs(big, shorter, "x").seeds_match);
  EXPECT_EQ(compare_runs(big, shorter, "x").failed_checks(),
            std::vector<std::string>{"seeds_match"});

  const EvalReport fewer = evaluate(models_, std::span(qs).first(5),
                                    static_source(*find_action(64, 6, 16)), CostModel{}, r);
  EXPECT_THROW(compare_runs(big, fewer, "x"), std::invalid_argument);
  const auto reordered = suite(6);
  std::vector<Question> rev(reordered.rbegin(), reordered.rend());
  const EvalReport back = evaluate(models_, rev, static_source(*find_action(64, 6, 16)),
                                   CostModel{}, r);
  EXPECT_THROW(compare_runs(big, back, "x"), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST(Ablation, GridLayout) {
  const auto grid = default_ablation_grid();
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_EQ(grid.front().variant, PpoVariant::standard);
  EXPECT_EQ(grid.back().variant, PpoVariant::max_entropy);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) EXPECT_NE(grid[i].name(), grid[j].name());
  }
}

class AblationTest : public BenchTest {
 protected:
  AblationSetup setup(const std::vector<Question>& train_qs,
                      const std::vector<Question>& eval_qs) const {
    const AppConfig c = default_config();
    AblationSetup s;
    s.models = &models_;
    s.train_corpus = train_qs;
    s.eval_suite = eval_qs;
    s.cost = c.cost;
    s.features = c.features;
    s.train_run = c.train_run;
    s.eval_run = c.eval_run;
    s.baseline = c.baseline_action;
    return s;
  }
};

TEST_F(AblationTest, RepeatedConfigGivesIdenticalRows) {
  CorpusConfig tc;
  tc.num_questions = 3;
  const auto train_qs = make_corpus(models_, tc);
  const auto eval_qs = suite(3);
  AblationSetup s = setup(train_qs, eval_qs);
  s.train_run.max_new_tokens = 1200;
  s.eval_run.max_new_tokens = 200;
  const AblationConfig c{PpoVariant::max_entropy, EncoderKind::context_embedding, 64};
  const std::vector<AblationConfig> twice = {c, c};
  const auto rows = compare_ablations(s, twice);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].tokens_per_second, rows[1].tokens_per_second);
  EXPECT_EQ(rows[0].speedup_vs_baseline, rows[1].speedup_vs_baseline);
  EXPECT_EQ(rows[0].unique_actions, rows[1].unique_actions);
  EXPECT_EQ(rows[0].wilcoxon_p, rows[1].wilcoxon_p);

  std::ostringstream a, b;
  write_ablation_table(a, std::span(rows).first(1));
  write_ablation_table(b, std::span(rows).last(1));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("text-embedding"), std::string::npos);

  s.models = nullptr;
  EXPECT_THROW(compare_ablations(s, twice), std::invalid_argument);
}

TEST_F(AblationTest, ConstantPolicyUsesOneAction) {
  const auto qs = suite(4);
  const EvalReport e = evaluate(models_, qs, constant_policy(*find_action(32, 4, 8)),
                                CostModel{}, run(300));
  EXPECT_EQ(e.unique_actions, 1);
}

// Max-entropy keeps more of the grid alive than the standard objective. Needs
// enough training for the standard policy to narrow; fewer questions leave both
// near uniform.
TEST_F(AblationTest, MaxEntropyUsesMoreActions) {
  CorpusConfig tc = default_config().train_corpus;
  tc.num_questions = 64;
  const auto train_qs = make_corpus(models_, tc);
  const auto eval_qs = make_corpus(models_, default_config().eval_corpus);
  AblationSetup s = setup(train_qs, eval_qs);
  const auto rows = compare_ablations(s, default_ablation_grid());
  ASSERT_EQ(rows.size(), 8u);
  int wins = 0;
  for (int cell = 0; cell < 4; ++cell) {
    const AblationRow& std_row = rows[static_cast<std::size_t>(cell)];
    const AblationRow& ent_row = rows[static_cast<std::size_t>(cell + 4)];
    ASSERT_EQ(std_row.config.encoder, ent_row.config.encoder);
    ASSERT_EQ(std_row.config.hidden, ent_row.config.hidden);
    wins += ent_row.unique_actions >= std_row.unique_actions;
    EXPECT_GT(std_row.speedup_vs_baseline, 0.0);
  }
  EXPECT_GE(wins, 3);

}

}  // namespace
}  // namespace spectune
