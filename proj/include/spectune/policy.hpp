#ifndef SPECTUNE_POLICY_HPP_
#define SPECTUNE_POLICY_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spectune/action.hpp"
#include "spectune/rng.hpp"

namespace spectune {

// Two tanh hidden layers and a linear head. All weights and biases live in one
// flat vector so that the optimizer and gradient checks can treat the network
// as a parameter array. Weight matrices are stored input-major.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int inputs, int hidden, int outputs);

  // Uniform init with variance gain^2 / fan_in; biases zero.
  void init(Rng& rng, double hidden_gain, double output_gain);

  struct Tape {
    std::vector<double> input;
    std::vector<double> h1;  // tanh outputs
    std::vector<double> h2;
    std::vector<double> out;
  };

  void forward(std::span<const double> x, Tape& tape) const;
  std::vector<double> forward(std::span<const double> x) const;
  // Accumulates dL/dparams into `grad` given dL/dout.
  void backward(const Tape& tape, std::span<const double> d_out,
                std::span<double> grad) const;

  int inputs() const { return inputs_; }
  int hidden() const { return hidden_; }
  int outputs() const { return outputs_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

 private:
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return w1() + static_cast<std::size_t>(hidden_ * inputs_); }
  std::size_t w2() const { return b1() + static_cast<std::size_t>(hidden_); }
  std::size_t b2() const { return w2() + static_cast<std::size_t>(hidden_ * hidden_); }
  std::size_t w3() const { return b2() + static_cast<std::size_t>(hidden_); }
  std::size_t b3() const { return w3() + static_cast<std::size_t>(outputs_ * hidden_); }

  int inputs_ = 0;
  int hidden_ = 0;
  int outputs_ = 0;
  std::vector<double> params_;
};

// Separate actor (logits over the feasible action list) and critic MLPs.
struct PolicyNet {
  PolicyNet() = default;
  PolicyNet(int state_dim, int hidden, std::uint64_t seed);

  int state_dim() const { return actor.inputs(); }
  int hidden() const { return actor.hidden(); }
  int num_actions() const { return actor.outputs(); }
  bool finite() const;

  Mlp actor;
  Mlp critic;
};

struct ActionDistribution {
  std::vector<double> probs;
  std::vector<double> log_probs;
};

// softmax(logits / temperature). Throws std::invalid_argument on a state of
// the wrong dimension or non-positive temperature.
ActionDistribution action_distribution(const PolicyNet& net,
                                       std::span<const double> state,
                                       double temperature);

double policy_entropy(std::span<const double> probs,
                      std::span<const double> log_probs);

enum class SampleMode { sample, greedy };

struct PolicyDecision {
  Action action;
  double log_prob = 0.0;  // under the temperature used
  double value = 0.0;
};

// Greedy mode takes the lowest-index argmax and ignores `rng`.
PolicyDecision policy_forward(const PolicyNet& net, std::span<const double> state,
                              double temperature, SampleMode mode, Rng* rng);

// ---------------------------------------------------------------------------

enum class PpoVariant { standard, max_entropy };

struct PPOConfig {
  PpoVariant variant = PpoVariant::max_entropy;
  double learning_rate = 3e-4;
  int n_steps = 64;
  int batch_size = 32;
  int epochs = 4;
  double clip_range = 0.2;
  double gamma = 0.95;
  double gae_lambda = 0.9;
  double ent_coef = 0.1;
  double vf_coef = 0.5;
  double inference_temperature = 1.5;
  // Not in the hyperparameter table; SB3 defaults plus reward scaling.
  double max_grad_norm = 0.5;
  double adam_eps = 1e-5;
  double reward_scale = 1e-3;
  bool normalize_advantage = true;

  static PPOConfig standard();
  static PPOConfig max_entropy();
  void validate() const;
};

struct Transition {
  std::vector<double> state;
  int action_index = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;  // interval-averaged tokens per second
  bool done = false;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma v_{t+1} - v_t, A_t = delta_t + gamma lambda A_{t+1};
// v_T is `bootstrap_value`. A true dones[t] cuts both recursions after t.
GaeResult compute_gae(std::span<const double> rewards,
                      std::span<const double> values, double gamma,
                      double lambda, double bootstrap_value,
                      std::span<const bool> dones = {});

// In place: mean 0, sd 1 (population sd, 1e-8 floor).
void normalize_advantages(std::span<double> advantages);

struct PpoSample {
  std::span<const double> state;
  int action = 0;
  double old_log_prob = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
};

struct ObjectiveTerms {
  double surrogate = 0.0;   // mean clipped surrogate
  double value_loss = 0.0;  // mean squared error
  double entropy = 0.0;     // mean policy entropy
  double objective = 0.0;   // surrogate - vf_coef*value_loss + ent_coef*entropy
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct PolicyGradients {
  std::vector<double> actor;
  std::vector<double> critic;
};

// Evaluates the objective (to be maximized) on a batch; when `grads` is
// non-null, writes d objective / d params for both networks.
ObjectiveTerms ppo_objective(const PolicyNet& net, std::span<const PpoSample> batch,
                             const PPOConfig& config, PolicyGradients* grads);

struct UpdateReport {
  bool aborted = false;
  std::string diagnostic;
  double objective_before = 0.0;  // full batch, before the first step
  double objective_after = 0.0;   // full batch, same advantages/returns
  ObjectiveTerms last;
  int minibatch_steps = 0;
};

// Adam over both networks with global gradient-norm clipping.
class PpoTrainer {
 public:
  PpoTrainer(PolicyNet& net, PPOConfig config, std::uint64_t seed);

  // GAE over `batch` (rewards scaled by reward_scale), then `epochs` passes of
  // shuffled minibatches. On a non-finite objective or gradient the network is
  // restored to its pre-update parameters and the report is marked aborted.
  UpdateReport update(std::span<const Transition> batch, double bootstrap_value);

  const PPOConfig& config() const { return config_; }
  long long steps_taken() const { return adam_step_; }

 private:
  void adam_step(std::span<double> params, std::span<const double> grad,
                 std::vector<double>& m, std::vector<double>& v) const;

  PolicyNet& net_;
  PPOConfig config_;
  Rng rng_;
  std::vector<double> actor_m_, actor_v_, critic_m_, critic_v_;
  long long adam_step_ = 0;
};

// ---------------------------------------------------------------------------

// Multi-step action persistence: one policy query serves `interval` steps.
class ActionCache {
 public:
  struct Selection {
    Action action;
    bool policy_invoked = false;
    int cache_step = 0;  // position inside the interval after this step, 1..N
  };

  // Queries when the cache step is 0 or nothing is cached.
  Selection select(const std::function<Action()>& query);
  // Call after each step; resets and returns true when the interval is full.
  bool end_step(int interval);
  void reset();

  int cache_step() const { return cache_step_; }
  const std::optional<Action>& cached() const { return cached_; }

 private:
  std::optional<Action> cached_;
  int cache_step_ = 0;
};

ActionCache::Selection cached_action(ActionCache& cache,
                                     const std::function<Action()>& query);

// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian binary: magic, version, config digest, dims, parameters.
void save_checkpoint(const std::string& path, const PolicyNet& net,
                     std::uint64_t config_digest);
// Throws ConfigError on a bad magic/version or when expected_digest is given
// and differs.
PolicyNet load_checkpoint(const std::string& path,
                          std::optional<std::uint64_t> expected_digest = {},
                          std::uint64_t* digest_out = nullptr);

// One row per parameter: net,layer,kind,row,col,value.
void export_policy_csv(std::ostream& out, const PolicyNet& net);

}  // namespace spectune

#endif  // SPECTUNE_POLICY_HPP_
