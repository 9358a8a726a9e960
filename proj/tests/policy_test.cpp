#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spectune/errors.hpp"
#include "spectune/policy.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace spectune {
namespace {

using namespace oracle;

// Zeroes the output layer (last weights and biases) of an MLP.
void zero_head(Mlp& mlp) {
  auto p = mlp.params();
  const auto head = static_cast<std::size_t>(mlp.outputs() * (mlp.hidden() + 1));
  std::fill(p.end() - static_cast<long>(head), p.end(), 0.0);
}

TEST(PolicyNet, ZeroHeadGivesUniformActions) {
  PolicyNet net(6, 16, 3);
  zero_head(net.actor);
  Rng rng(1);
  const auto s = random_state(rng, 6);
  const ActionDistribution d = action_distribution(net, s, 1.0);
  ASSERT_EQ(d.probs.size(), static_cast<std::size_t>(kActions));
  for (double p : d.probs) EXPECT_NEAR(p, 1.0 / kActions, 1e-15);
}

TEST(PolicyNet, LowTemperatureConcentratesOnTheArgmax) {
  PolicyNet net(6, 16, 4);
  Rng rng(2);
  const auto s = random_state(rng, 6);
  const auto logits = net.actor.forward(s);
  const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  const ActionDistribution d = action_distribution(net, s, 1e-6);
  EXPECT_NEAR(d.probs[best], 1.0, 1e-9);
  const PolicyDecision g = policy_forward(net, s, 1.0, SampleMode::greedy, nullptr);
  EXPECT_EQ(g.action.index, static_cast<int>(best));
}

TEST(PolicyNet, SoftmaxSumsToOne) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    PolicyNet net(5, 12, static_cast<std::uint64_t>(i));
    const auto s = random_state(rng, 5);
    for (double tau : {0.5, 1.0, 1.5}) {
      const auto d = action_distribution(net, s, tau);
      double sum = 0.0;
      for (double p : d.probs) sum += p;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(PolicyNet, RejectsWrongStateDimensionAndTemperature) {
  PolicyNet net(6, 16, 3);
  const std::vector<double> s(5, 0.0);
  EXPECT_THROW(action_distribution(net, s, 1.0), std::invalid_argument);
  const std::vector<double> ok(6, 0.0);
  EXPECT_THROW(action_distribution(net, ok, 0.0), std::invalid_argument);
}

TEST(PolicyNet, SampledActionsAreAlwaysFeasible) {
  PolicyNet net(8, 16, 9);
  Rng rng(10);
  for (int i = 0; i < 10000; ++i) {
    const auto s = random_state(rng, 8);
    const PolicyDecision d = policy_forward(net, s, 1.5, SampleMode::sample, &rng);
    ASSERT_TRUE(d.action.feasible());
    ASSERT_LE(d.log_prob, 0.0);
  }
}

TEST(PolicyNet, SamplingIsReplayableFromTheSeed) {
  PolicyNet net(8, 16, 9);
  const std::vector<double> s(8, 0.25);
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(policy_forward(net, s, 1.0, SampleMode::sample, &a).action.index,
              policy_forward(net, s, 1.0, SampleMode::sample, &b).action.index);
  }
}

// ---------------------------------------------------------------------------

TEST(Gae, MatchesTheUnrolledDoubleSum) {
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    std::vector<double> r(n), v(n);
    for (int i = 0; i < n; ++i) {
      r[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
      v[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
    }
    const double boot = rng.uniform(-2.0, 2.0);
    const double gamma = rng.uniform(0.5, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    const GaeResult g = compute_gae(r, v, gamma, lambda, boot);
    const std::vector<double> want = gae_double_sum(r, v, gamma, lambda, boot);
    for (std::size_t t = 0; t < r.size(); ++t) {
      EXPECT_NEAR(g.advantages[t], want[t], 1e-12);
      EXPECT_NEAR(g.returns[t], want[t] + v[t], 1e-12);
    }
  }
}

TEST(Gae, LambdaZeroAndGammaZero) {
  const std::vector<double> r = {1.0, 2.0, 3.0};
  const std::vector<double> v = {0.5, 0.25, 0.125};
  const GaeResult l0 = compute_gae(r, v, 0.9, 0.0, 1.0);
  EXPECT_EQ(l0.advantages[0], 1.0 + 0.9 * 0.25 - 0.5);
  EXPECT_EQ(l0.advantages[2], 3.0 + 0.9 * 1.0 - 0.125);
  const GaeResult g0 = compute_gae(r, v, 0.0, 0.7, 1.0);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(g0.advantages[i], r[i] - v[i]);
}

TEST(Gae, DoneCutsTheRecursion) {
  const std::vector<double> r = {1.0, 1.0};
  const std::vector<double> v = {0.0, 0.0};
  const bool dones[2] = {true, false};
  const GaeResult g = compute_gae(r, v, 0.9, 0.9, 5.0, dones);
  EXPECT_EQ(g.advantages[0], 1.0);
  EXPECT_EQ(g.advantages[1], 1.0 + 0.9 * 5.0);
}

TEST(Gae, RejectsEmptyAndMismatched) {
  EXPECT_THROW(compute_gae({}, {}, 0.9, 0.9, 0.0), std::invalid_argument);
  const std::vector<double> a = {1.0}, b = {1.0, 2.0};
  EXPECT_THROW(compute_gae(a, b, 0.9, 0.9, 0.0), std::invalid_argument);
}

TEST(Gae, NormalizedAdvantagesHaveZeroMeanUnitSd) {
  std::vector<double> a = {1.0, 2.0, 4.0, 8.0};
  normalize_advantages(a);
  double mean = 0.0, ss = 0.0;
  for (double x : a) mean += x;
  mean /= 4.0;
  for (double x : a) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(ss / 4.0), 1.0, 1e-7);
}

// ---------------------------------------------------------------------------


// Central differences on a random subset of each network's parameters.
void check_gradients(PolicyNet net, const Batch& b, const PPOConfig& c, Rng& rng) {
  PolicyGradients g;
  ppo_objective(net, b.samples, c, &g);
  const double h = 1e-5;
  for (Mlp* mlp : {&net.actor, &net.critic}) {
    const std::vector<double>& grad = mlp == &net.actor ? g.actor : g.critic;
    auto p = mlp->params();
    for (int probe = 0; probe < 40; ++probe) {
      const std::size_t i = rng.below(p.size());
      const double keep = p[i];
      p[i] = keep + h;
      const double up = ppo_objective(net, b.samples, c, nullptr).objective;
      p[i] = keep - h;
      const double down = ppo_objective(net, b.samples, c, nullptr).objective;
      p[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      EXPECT_LT(fd_relative_error(fd, grad[i]), 1e-4)
          << (mlp == &net.actor ? "actor" : "critic") << " param " << i << " fd " << fd
          << " analytic " << grad[i];
    }
  }
}

TEST(PpoGradients, SurrogateMatchesFiniteDifferences) {
  Rng rng(100);
  PPOConfig c;
  c.ent_coef = 0.0;
  c.vf_coef = 0.0;
  for (int i = 0; i < 20; ++i) {
    PolicyNet net(6, 8, 1000 + static_cast<std::uint64_t>(i));
    const Batch b = random_batch(net, rng, 8);
    check_gradients(net, b, c, rng);
  }
}

TEST(PpoGradients, ValueLossMatchesFiniteDifferences) {
  Rng rng(200);
  PPOConfig c;
  c.ent_coef = 0.0;
  for (int i = 0; i < 20; ++i) {
    PolicyNet net(6, 8, 2000 + static_cast<std::uint64_t>(i));
    Batch b = random_batch(net, rng, 8);
    for (auto& s : b.samples) s.advantage = 0.0;
    check_gradients(net, b, c, rng);
  }
}

TEST(PpoGradients, EntropyMatchesFiniteDifferences) {
  Rng rng(300);
  PPOConfig c;
  c.ent_coef = 1.0;
  c.vf_coef = 0.0;
  for (int i = 0; i < 20; ++i) {
    PolicyNet net(6, 8, 3000 + static_cast<std::uint64_t>(i));
    // Larger output weights than the init so the entropy is not flat.
    for (double& w : net.actor.params()) w *= 5.0;
    Batch b = random_batch(net, rng, 8);
    for (auto& s : b.samples) s.advantage = 0.0;
    check_gradients(net, b, c, rng);
  }
}

TEST(PpoGradients, TotalObjectiveMatchesFiniteDifferences) {
  Rng rng(400);
  for (int i = 0; i < 20; ++i) {
    PolicyNet net(6, 8, 4000 + static_cast<std::uint64_t>(i));
    const Batch b = random_batch(net, rng, 8);
    check_gradients(net, b, i % 2 ? PPOConfig::standard() : PPOConfig::max_entropy(), rng);
  }
}

TEST(PpoObjective, RatioOneGivesTheMeanAdvantage) {
  PolicyNet net(6, 8, 5);
  Rng rng(6);
  Batch b = random_batch(net, rng, 10);
  double mean = 0.0;
  for (auto& s : b.samples) {
    s.old_log_prob = action_distribution(net, s.state, 1.0).log_probs[static_cast<std::size_t>(s.action)];
    mean += s.advantage;
  }
  mean /= 10.0;
  const ObjectiveTerms t = ppo_objective(net, b.samples, PPOConfig{}, nullptr);
  EXPECT_NEAR(t.surrogate, mean, 1e-15);
  EXPECT_EQ(t.clip_fraction, 0.0);
}

TEST(PpoObjective, ZeroEntropyCoefficientReducesToStandardBitForBit) {
  PolicyNet net(6, 8, 7);
  Rng rng(8);
  const Batch b = random_batch(net, rng, 16);
  PPOConfig maxent = PPOConfig::max_entropy();
  maxent.ent_coef = 0.0;
  PPOConfig standard = PPOConfig::standard();
  standard.ent_coef = 0.0;
  PolicyGradients gm, gs;
  const ObjectiveTerms m = ppo_objective(net, b.samples, maxent, &gm);
  const ObjectiveTerms s = ppo_objective(net, b.samples, standard, &gs);
  EXPECT_EQ(m.objective, s.objective);
  EXPECT_EQ(m.objective, m.surrogate - maxent.vf_coef * m.value_loss);
  EXPECT_EQ(gm.actor, gs.actor);
  EXPECT_EQ(gm.critic, gs.critic);
}

TEST(PpoConfig, ShippedPresets) {
  const PPOConfig s = PPOConfig::standard();
  const PPOConfig m = PPOConfig::max_entropy();
  for (const PPOConfig* c : {&s, &m}) {
    EXPECT_EQ(c->learning_rate, 3e-4);
    EXPECT_EQ(c->n_steps, 64);
    EXPECT_EQ(c->batch_size, 32);
    EXPECT_EQ(c->epochs, 4);
    EXPECT_EQ(c->clip_range, 0.2);
    EXPECT_EQ(c->vf_coef, 0.5);
  }
  EXPECT_EQ(s.gamma, 0.99);
  EXPECT_EQ(s.gae_lambda, 0.95);
  EXPECT_EQ(s.ent_coef, 0.01);
  EXPECT_EQ(s.inference_temperature, 1.0);
  EXPECT_EQ(m.gamma, 0.95);
  EXPECT_EQ(m.gae_lambda, 0.9);
  EXPECT_EQ(m.ent_coef, 0.1);
  EXPECT_EQ(m.inference_temperature, 1.5);
}

TEST(PpoConfig, ValidateRejectsBadValues) {
  PPOConfig c;
  c.clip_range = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PPOConfig{};
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PPOConfig{};
  c.gae_lambda = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

// ---------------------------------------------------------------------------

// The shipped max-entropy setting, trained once and shared by two tests.
const BanditRun& shipped_bandit() {
  static const BanditRun run = run_bandit(PPOConfig::max_entropy(), 200, 42);
  return run;
}

TEST(PpoTraining, LearnsATwoStateBandit) {
  const BanditRun& r = shipped_bandit();
  EXPECT_GE(r.accuracy, 0.95);
  EXPECT_EQ(r.aborted, 0);
  const BanditRun s = run_bandit(PPOConfig::standard(), 200, 42);
  EXPECT_GE(s.accuracy, 0.95);
}

TEST(PpoTraining, LargerEntropyBonusKeepsMoreEntropy) {
  PPOConfig lo = PPOConfig::max_entropy();
  lo.ent_coef = 0.01;
  const BanditRun& a = shipped_bandit();
  const BanditRun b = run_bandit(lo, 200, 42);
  EXPECT_GE(b.accuracy, 0.95);
  EXPECT_GT(a.entropy, b.entropy);
}

TEST(PpoTraining, UpdateImprovesTheObjectiveOnAFixedBatch) {
  PolicyNet net(Bandit::kDim, 32, 3);
  PpoTrainer trainer(net, PPOConfig{}, 4);
  Rng rng(5);
  std::vector<Transition> buf;
  for (int i = 0; i < 64; ++i) {
    const int which = static_cast<int>(rng.below(2));
    Transition t;
    t.state = Bandit::state(which, rng);
    const PolicyDecision d = policy_forward(net, t.state, 1.0, SampleMode::sample, &rng);
    t.action_index = d.action.index;
    t.log_prob = d.log_prob;
    t.value = d.value;
    t.reward = 1000.0 * rng.uniform();
    t.done = i % 8 == 7;
    buf.push_back(std::move(t));
  }
  const UpdateReport r = trainer.update(buf, 0.0);
  ASSERT_FALSE(r.aborted);
  EXPECT_GT(r.objective_after, r.objective_before);
  EXPECT_EQ(r.minibatch_steps, 4 * 2);
  EXPECT_EQ(trainer.steps_taken(), 8);
}

TEST(PpoTraining, NonFiniteRewardAbortsAndRestores) {
  PolicyNet net(Bandit::kDim, 16, 3);
  const PolicyNet before = net;
  PpoTrainer trainer(net, PPOConfig{}, 4);
  Rng rng(5);
  std::vector<Transition> buf(4);
  for (auto& t : buf) {
    t.state = Bandit::state(0, rng);
    t.reward = 1.0;
  }
  buf[2].reward = std::nan("");
  const UpdateReport r = trainer.update(buf, 0.0);
  EXPECT_TRUE(r.aborted);
  EXPECT_FALSE(r.diagnostic.empty());
  EXPECT_TRUE(std::equal(before.actor.params().begin(), before.actor.params().end(),
                         net.actor.params().begin()));
}

// ---------------------------------------------------------------------------

int invocations(int steps, int interval) {
  ActionCache cache;
  int calls = 0;
  for (int i = 0; i < steps; ++i) {
    const auto s = cached_action(cache, [&] {
      ++calls;
      return enumerate_actions()[0];
    });
    EXPECT_GE(s.cache_step, 1);
    EXPECT_LE(s.cache_step, interval);
    cache.end_step(interval);
  }
  return calls;
}

TEST(ActionCache, CountsQueries) {
  EXPECT_EQ(invocations(35, 10), 4);
  EXPECT_EQ(invocations(12, 1), 12);
  EXPECT_EQ(invocations(12, 5), 3);
  EXPECT_EQ(invocations(30, 30), 1);
  EXPECT_EQ(invocations(31, 30), 2);
}

TEST(ActionCache, ServesTheCachedActionInsideAnInterval) {
  ActionCache cache;
  int n = 0;
  auto query = [&] { return enumerate_actions()[static_cast<std::size_t>(n++)]; };
  const auto a = cached_action(cache, query);
  EXPECT_TRUE(a.policy_invoked);
  EXPECT_FALSE(cache.end_step(3));
  const auto b = cached_action(cache, query);
  EXPECT_FALSE(b.policy_invoked);
  EXPECT_EQ(b.action, a.action);
  EXPECT_EQ(b.cache_step, 2);
  cache.end_step(3);
  cached_action(cache, query);
  EXPECT_TRUE(cache.end_step(3));
  EXPECT_TRUE(cached_action(cache, query).policy_invoked);
  cache.reset();
  EXPECT_FALSE(cache.cached().has_value());
}

// ---------------------------------------------------------------------------

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("spectune_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

TEST_F(CheckpointTest, RoundTripsBitExactly) {
  const PolicyNet net(12, 16, 77);
  save_checkpoint(path("a.bin"), net, 0xabcdef);
  std::uint64_t digest = 0;
  const PolicyNet back = load_checkpoint(path("a.bin"), 0xabcdefULL, &digest);
  EXPECT_EQ(digest, 0xabcdefULL);
  EXPECT_TRUE(std::equal(net.actor.params().begin(), net.actor.params().end(),
                         back.actor.params().begin(), back.actor.params().end()));
  EXPECT_TRUE(std::equal(net.critic.params().begin(), net.critic.params().end(),
                         back.critic.params().begin(), back.critic.params().end()));
  save_checkpoint(path("b.bin"), back, 0xabcdef);
  std::ifstream a(path("a.bin"), std::ios::binary), b(path("b.bin"), std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

TEST_F(CheckpointTest, RejectsDigestMismatchBadMagicAndTruncation) {
  const PolicyNet net(4, 8, 1);
  save_checkpoint(path("a.bin"), net, 1);
  EXPECT_THROW(load_checkpoint(path("a.bin"), 2ULL), ConfigError);
  std::string bytes;
  {
    std::ifstream in(path("a.bin"), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    bytes = ss.str();
  }
  {
    std::ofstream out(path("bad.bin"), std::ios::binary);
    std::string b = bytes;
    b[0] = 'X';
    out << b;
  }
  EXPECT_THROW(load_checkpoint(path("bad.bin")), ConfigError);
  {
    std::ofstream out(path("short.bin"), std::ios::binary);
    out << bytes.substr(0, bytes.size() - 9);
  }
  EXPECT_THROW(load_checkpoint(path("short.bin")), ConfigError);
  EXPECT_THROW(load_checkpoint(path("missing.bin")), ConfigError);
}

TEST(ExportPolicy, OneRowPerParameter) {
  const PolicyNet net(3, 4, 2);
  std::ostringstream out;
  export_policy_csv(out, net);
  const std::string text = out.str();
  const auto rows = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  EXPECT_EQ(rows, 1 + net.actor.params().size() + net.critic.params().size());
  EXPECT_EQ(text.substr(0, text.find('\n')), "net,layer,kind,row,col,value");
  // First actor weight connects input 0 to hidden unit 0.
  char want[64];
  std::snprintf(want, sizeof(want), "actor,1,weight,0,0,%.17g", net.actor.params()[0]);
  EXPECT_NE(text.find(want), std::string::npos);
}

}  // namespace
}  // namespace spectune
