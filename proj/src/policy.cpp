#include "spectune/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "spectune/errors.hpp"

namespace spectune {

Mlp::Mlp(int inputs, int hidden, int outputs)
    : inputs_(inputs), hidden_(hidden), outputs_(outputs) {
  if (inputs < 1 || hidden < 1 || outputs < 1) {
    throw std::invalid_argument("Mlp: all layer sizes must be >= 1");
  }
  params_.assign(b3() + static_cast<std::size_t>(outputs_), 0.0);
}

void Mlp::init(Rng& rng, double hidden_gain, double output_gain) {
  auto fill = [&](std::size_t offset, int rows, int fan_in, double gain) {
    const double a = gain * std::sqrt(3.0 / fan_in);
    for (std::size_t i = 0; i < static_cast<std::size_t>(rows * fan_in); ++i) {
      params_[offset + i] = rng.uniform(-a, a);
    }
  };
  std::fill(params_.begin(), params_.end(), 0.0);
  fill(w1(), hidden_, inputs_, hidden_gain);
  fill(w2(), hidden_, hidden_, hidden_gain);
  fill(w3(), outputs_, hidden_, output_gain);
}

namespace {

// Weights are stored input-major (w[i * out + j] connects input i to output
// j) so the inner loops run over contiguous outputs.
void dense_forward(const double* w, const double* b, const double* x, std::size_t in,
                   std::size_t out, double* z) {
  std::copy(b, b + out, z);
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = w + i * out;
    for (std::size_t j = 0; j < out; ++j) z[j] += xi * row[j];
  }
}

// Accumulates weight/bias gradients; writes dL/dx into dx when non-null.
void dense_backward(const double* w, const double* x, const double* dz, std::size_t in,
                    std::size_t out, double* gw, double* gb, double* dx) {
  for (std::size_t j = 0; j < out; ++j) gb[j] += dz[j];
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    double* grow = gw + i * out;
    for (std::size_t j = 0; j < out; ++j) grow[j] += xi * dz[j];
  }
  if (dx == nullptr) return;
  // Four fixed partial sums per row: vectorizes and stays deterministic.
  for (std::size_t i = 0; i < in; ++i) {
    const double* row = w + i * out;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= out; j += 4) {
      a0 += row[j] * dz[j];
      a1 += row[j + 1] * dz[j + 1];
      a2 += row[j + 2] * dz[j + 2];
      a3 += row[j + 3] * dz[j + 3];
    }
    for (; j < out; ++j) a0 += row[j] * dz[j];
    dx[i] = (a0 + a1) + (a2 + a3);
  }
}

}  // namespace

void Mlp::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != static_cast<std::size_t>(inputs_)) {
    throw std::invalid_argument("Mlp: input has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(inputs_));
  }
  const auto in = static_cast<std::size_t>(inputs_);
  const auto h = static_cast<std::size_t>(hidden_);
  const auto out = static_cast<std::size_t>(outputs_);
  const double* p = params_.data();
  tape.input.assign(x.begin(), x.end());
  tape.h1.resize(h);
  tape.h2.resize(h);
  tape.out.resize(out);
  dense_forward(p + w1(), p + b1(), x.data(), in, h, tape.h1.data());
  for (double& v : tape.h1) v = std::tanh(v);
  dense_forward(p + w2(), p + b2(), tape.h1.data(), h, h, tape.h2.data());
  for (double& v : tape.h2) v = std::tanh(v);
  dense_forward(p + w3(), p + b3(), tape.h2.data(), h, out, tape.out.data());
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Tape tape;
  forward(x, tape);
  return std::move(tape.out);
}

void Mlp::backward(const Tape& tape, std::span<const double> d_out,
                   std::span<double> grad) const {
  const auto in = static_cast<std::size_t>(inputs_);
  const auto h = static_cast<std::size_t>(hidden_);
  const auto out = static_cast<std::size_t>(outputs_);
  const double* p = params_.data();
  double* g = grad.data();

  std::vector<double> dz2(h), dz1(h);
  dense_backward(p + w3(), tape.h2.data(), d_out.data(), h, out, g + w3(), g + b3(), dz2.data());
  for (std::size_t i = 0; i < h; ++i) dz2[i] *= 1.0 - tape.h2[i] * tape.h2[i];
  dense_backward(p + w2(), tape.h1.data(), dz2.data(), h, h, g + w2(), g + b2(), dz1.data());
  for (std::size_t i = 0; i < h; ++i) dz1[i] *= 1.0 - tape.h1[i] * tape.h1[i];
  dense_backward(p + w1(), tape.input.data(), dz1.data(), in, h, g + w1(), g + b1(), nullptr);
}

// ---------------------------------------------------------------------------

PolicyNet::PolicyNet(int state_dim, int hidden, std::uint64_t seed)
    : actor(state_dim, hidden, static_cast<int>(enumerate_actions().size())),
      critic(state_dim, hidden, 1) {
  Rng rng(seed, 0x706f6c6963790000ULL);
  const double sqrt2 = std::sqrt(2.0);
  actor.init(rng, sqrt2, 0.01);
  critic.init(rng, sqrt2, 1.0);
}

bool PolicyNet::finite() const {
  auto ok = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return ok(actor.params()) && ok(critic.params());
}

namespace {

void log_softmax(std::span<const double> logits, double temperature,
                 ActionDistribution& out) {
  const std::size_t n = logits.size();
  out.log_probs.resize(n);
  out.probs.resize(n);
  double m = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    out.log_probs[i] = logits[i] / temperature;
    m = std::max(m, out.log_probs[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(out.log_probs[i] - m);
  const double lse = m + std::log(sum);
  for (std::size_t i = 0; i < n; ++i) {
    out.log_probs[i] -= lse;
    out.probs[i] = std::exp(out.log_probs[i]);
  }
}

void check_state(const PolicyNet& net, std::span<const double> state) {
  if (state.size() != static_cast<std::size_t>(net.state_dim())) {
    throw std::invalid_argument("policy: state has dimension " + std::to_string(state.size()) +
                                ", network expects " + std::to_string(net.state_dim()));
  }
}

}  // namespace

ActionDistribution action_distribution(const PolicyNet& net, std::span<const double> state,
                                       double temperature) {
  check_state(net, state);
  if (!(temperature > 0.0)) throw std::invalid_argument("policy: temperature must be > 0");
  ActionDistribution dist;
  log_softmax(net.actor.forward(state), temperature, dist);
  return dist;
}

double policy_entropy(std::span<const double> probs, std::span<const double> log_probs) {
  double h = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) h -= probs[i] * log_probs[i];
  return h;
}

PolicyDecision policy_forward(const PolicyNet& net, std::span<const double> state,
                              double temperature, SampleMode mode, Rng* rng) {
  const ActionDistribution dist = action_distribution(net, state, temperature);
  std::size_t chosen = 0;
  if (mode == SampleMode::greedy) {
    chosen = static_cast<std::size_t>(
        std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin());
  } else {
    if (rng == nullptr) throw std::invalid_argument("policy_forward: sampling needs an rng");
    const double u = rng->uniform();
    double acc = 0.0;
    chosen = dist.probs.size() - 1;
    for (std::size_t i = 0; i < dist.probs.size(); ++i) {
      acc += dist.probs[i];
      if (u < acc) {
        chosen = i;
        break;
      }
    }
  }
  PolicyDecision d;
  d.action = enumerate_actions()[chosen];
  d.log_prob = dist.log_probs[chosen];
  d.value = net.critic.forward(state)[0];
  return d;
}

// ---------------------------------------------------------------------------

PPOConfig PPOConfig::standard() {
  PPOConfig c;
  c.variant = PpoVariant::standard;
  c.gamma = 0.99;
  c.gae_lambda = 0.95;
  c.ent_coef = 0.01;
  c.inference_temperature = 1.0;
  return c;
}

PPOConfig PPOConfig::max_entropy() { return PPOConfig{}; }

void PPOConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("ppo: learning_rate must be > 0");
  if (n_steps < 1 || batch_size < 1 || epochs < 1) {
    throw ConfigError("ppo: n_steps, batch_size and epochs must be >= 1");
  }
  if (!(clip_range > 0.0)) throw ConfigError("ppo: clip_range must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("ppo: gae_lambda must lie in [0, 1]");
  }
  if (!(ent_coef >= 0.0) || !(vf_coef >= 0.0)) throw ConfigError("ppo: coefficients must be >= 0");
  if (!(inference_temperature > 0.0)) throw ConfigError("ppo: temperature must be > 0");
  if (!(max_grad_norm > 0.0) || !(adam_eps > 0.0) || !(reward_scale > 0.0)) {
    throw ConfigError("ppo: max_grad_norm, adam_eps and reward_scale must be > 0");
  }
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double gamma, double lambda, double bootstrap_value,
                      std::span<const bool> dones) {
  if (rewards.empty()) throw std::invalid_argument("compute_gae: empty sequence");
  if (rewards.size() != values.size() || (!dones.empty() && dones.size() != rewards.size())) {
    throw std::invalid_argument("compute_gae: sequence lengths differ");
  }
  const std::size_t n = rewards.size();
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t i = n; i-- > 0;) {
    const double live = (!dones.empty() && dones[i]) ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    const double adv = delta + gamma * lambda * live * next_adv;
    out.advantages[i] = adv;
    out.returns[i] = adv + values[i];
    next_adv = adv;
    next_value = values[i];
  }
  return out;
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double ss = 0.0;
  for (double a : advantages) ss += (a - mean) * (a - mean);
  const double sd = std::sqrt(ss / n) + 1e-8;
  for (double& a : advantages) a = (a - mean) / sd;
}

ObjectiveTerms ppo_objective(const PolicyNet& net, std::span<const PpoSample> batch,
                             const PPOConfig& config, PolicyGradients* grads) {
  if (batch.empty()) throw std::invalid_argument("ppo_objective: empty batch");
  if (grads != nullptr) {
    grads->actor.assign(net.actor.params().size(), 0.0);
    grads->critic.assign(net.critic.params().size(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double lo = 1.0 - config.clip_range;
  const double hi = 1.0 + config.clip_range;

  ObjectiveTerms t;
  Mlp::Tape actor_tape;
  Mlp::Tape critic_tape;
  ActionDistribution dist;
  std::vector<double> d_logits;
  for (const PpoSample& s : batch) {
    check_state(net, s.state);
    net.actor.forward(s.state, actor_tape);
    log_softmax(actor_tape.out, 1.0, dist);
    const auto a = static_cast<std::size_t>(s.action);
    const double log_ratio = dist.log_probs[a] - s.old_log_prob;
    const double ratio = std::exp(log_ratio);
    const double unclipped = ratio * s.advantage;
    const double clipped = std::clamp(ratio, lo, hi) * s.advantage;
    const bool use_unclipped = unclipped <= clipped;
    const double entropy = policy_entropy(dist.probs, dist.log_probs);

    t.surrogate += std::min(unclipped, clipped);
    t.entropy += entropy;
    t.approx_kl += (ratio - 1.0) - log_ratio;
    if (std::abs(ratio - 1.0) > config.clip_range) t.clip_fraction += 1.0;

    net.critic.forward(s.state, critic_tape);
    const double err = s.ret - critic_tape.out[0];
    t.value_loss += err * err;

    if (grads == nullptr) continue;
    // d surrogate / d log pi(a|s)
    const double g_logp = use_unclipped ? unclipped : 0.0;
    d_logits.assign(dist.probs.size(), 0.0);
    for (std::size_t j = 0; j < dist.probs.size(); ++j) {
      const double p = dist.probs[j];
      const double d_surr = g_logp * ((j == a ? 1.0 : 0.0) - p);
      const double d_ent = -p * (dist.log_probs[j] + entropy);
      d_logits[j] = inv_n * (d_surr + config.ent_coef * d_ent);
    }
    net.actor.backward(actor_tape, d_logits, grads->actor);
    const double d_value = inv_n * config.vf_coef * 2.0 * err;
    net.critic.backward(critic_tape, std::span<const double>(&d_value, 1), grads->critic);
  }
  t.surrogate *= inv_n;
  t.entropy *= inv_n;
  t.value_loss *= inv_n;
  t.approx_kl *= inv_n;
  t.clip_fraction *= inv_n;
  t.objective = t.surrogate - config.vf_coef * t.value_loss + config.ent_coef * t.entropy;
  return t;
}

PpoTrainer::PpoTrainer(PolicyNet& net, PPOConfig config, std::uint64_t seed)
    : net_(net), config_(config), rng_(seed, 0x6d696e6962000000ULL) {
  config_.validate();
  actor_m_.assign(net_.actor.params().size(), 0.0);
  actor_v_ = actor_m_;
  critic_m_.assign(net_.critic.params().size(), 0.0);
  critic_v_ = critic_m_;
}

void PpoTrainer::adam_step(std::span<double> params, std::span<const double> grad,
                           std::vector<double>& m, std::vector<double>& v) const {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam_step_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam_step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    // Ascent on the objective.
    const double g = -grad[i];
    m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
    v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.adam_eps);
  }
}

UpdateReport PpoTrainer::update(std::span<const Transition> batch, double bootstrap_value) {
  if (batch.empty()) throw std::invalid_argument("ppo_update: empty batch");
  const std::size_t n = batch.size();
  std::vector<double> rewards(n), values(n);
  std::vector<bool> dones_vec(n);
  for (std::size_t i = 0; i < n; ++i) {
    rewards[i] = batch[i].reward * config_.reward_scale;
    values[i] = batch[i].value;
    dones_vec[i] = batch[i].done;
  }
  std::unique_ptr<bool[]> dones(new bool[n]);
  for (std::size_t i = 0; i < n; ++i) dones[i] = dones_vec[i];
  GaeResult gae = compute_gae(rewards, values, config_.gamma, config_.gae_lambda,
                              bootstrap_value, std::span<const bool>(dones.get(), n));
  if (config_.normalize_advantage && n > 1) normalize_advantages(gae.advantages);

  std::vector<PpoSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    samples[i] = {batch[i].state, batch[i].action_index, batch[i].log_prob,
                  gae.advantages[i], gae.returns[i]};
  }

  UpdateReport report;
  const PolicyNet snapshot = net_;
  const auto abort = [&](const std::string& why) {
    net_ = snapshot;
    report.aborted = true;
    report.diagnostic = why;
    return report;
  };

  report.objective_before = ppo_objective(net_, samples, config_, nullptr).objective;
  if (!std::isfinite(report.objective_before)) return abort("non-finite objective before update");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mb = static_cast<std::size_t>(config_.batch_size);
  std::vector<PpoSample> minibatch;
  PolicyGradients grads;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    // Fisher-Yates with the trainer's own stream.
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);
    for (std::size_t start = 0; start < n; start += mb) {
      minibatch.clear();
      for (std::size_t i = start; i < std::min(n, start + mb); ++i) {
        minibatch.push_back(samples[order[i]]);
      }
      report.last = ppo_objective(net_, minibatch, config_, &grads);
      double norm2 = 0.0;
      for (double g : grads.actor) norm2 += g * g;
      for (double g : grads.critic) norm2 += g * g;
      if (!std::isfinite(report.last.objective) || !std::isfinite(norm2)) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "non-finite gradient in epoch %d at minibatch offset %zu "
                      "(objective %g, |grad|^2 %g)",
                      epoch, start, report.last.objective, norm2);
        return abort(buf);
      }
      const double norm = std::sqrt(norm2);
      if (norm > config_.max_grad_norm) {
        const double scale = config_.max_grad_norm / (norm + 1e-6);
        for (double& g : grads.actor) g *= scale;
        for (double& g : grads.critic) g *= scale;
      }
      ++adam_step_;
      adam_step(net_.actor.params(), grads.actor, actor_m_, actor_v_);
      adam_step(net_.critic.params(), grads.critic, critic_m_, critic_v_);
      ++report.minibatch_steps;
    }
  }
  report.objective_after = ppo_objective(net_, samples, config_, nullptr).objective;
  if (!net_.finite() || !std::isfinite(report.objective_after)) {
    return abort("non-finite parameters after update");
  }
  return report;
}

// ---------------------------------------------------------------------------

ActionCache::Selection ActionCache::select(const std::function<Action()>& query) {
  Selection s;
  if (cache_step_ == 0 || !cached_) {
    cached_ = query();
    cache_step_ = 1;
    s.policy_invoked = true;
  } else {
    ++cache_step_;
  }
  s.action = *cached_;
  s.cache_step = cache_step_;
  return s;
}

bool ActionCache::end_step(int interval) {
  if (cache_step_ >= interval) {
    cache_step_ = 0;
    return true;
  }
  return false;
}

void ActionCache::reset() {
  cached_.reset();
  cache_step_ = 0;
}

ActionCache::Selection cached_action(ActionCache& cache, const std::function<Action()>& query) {
  return cache.select(query);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'P', 'T', 'P', 'O', 'L', 'C', 'Y'};

void put_u32(std::ostream& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_u64(std::ostream& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((x >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(static_cast<unsigned char>(in.get())) << (8 * i);
  return x;
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(in.get())) << (8 * i);
  return x;
}

void put_params(std::ostream& out, std::span<const double> params) {
  put_u64(out, params.size());
  for (double p : params) put_u64(out, std::bit_cast<std::uint64_t>(p));
}

void get_params(std::istream& in, std::span<double> params) {
  if (get_u64(in) != params.size()) throw ConfigError("checkpoint: parameter count mismatch");
  for (double& p : params) p = std::bit_cast<double>(get_u64(in));
}

}  // namespace

void save_checkpoint(const std::string& path, const PolicyNet& net, std::uint64_t config_digest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, config_digest);
  put_u32(out, static_cast<std::uint32_t>(net.state_dim()));
  put_u32(out, static_cast<std::uint32_t>(net.hidden()));
  put_u32(out, static_cast<std::uint32_t>(net.num_actions()));
  put_params(out, net.actor.params());
  put_params(out, net.critic.params());
  if (!out) throw ConfigError("checkpoint: write failed for " + path);
}

PolicyNet load_checkpoint(const std::string& path, std::optional<std::uint64_t> expected_digest,
                          std::uint64_t* digest_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kMagic)) {
    throw ConfigError("checkpoint: " + path + " is not a policy checkpoint");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint64_t digest = get_u64(in);
  if (expected_digest && *expected_digest != digest) {
    throw ConfigError("checkpoint: config digest mismatch for " + path);
  }
  if (digest_out != nullptr) *digest_out = digest;
  const auto state_dim = static_cast<int>(get_u32(in));
  const auto hidden = static_cast<int>(get_u32(in));
  const auto actions = static_cast<int>(get_u32(in));
  if (!in || state_dim < 1 || hidden < 1 ||
      actions != static_cast<int>(enumerate_actions().size())) {
    throw ConfigError("checkpoint: bad header in " + path);
  }
  PolicyNet net(state_dim, hidden, 0);
  get_params(in, net.actor.params());
  get_params(in, net.critic.params());
  if (!in) throw ConfigError("checkpoint: truncated file " + path);
  return net;
}

void export_policy_csv(std::ostream& out, const PolicyNet& net) {
  out << "net,layer,kind,row,col,value\n";
  char buf[64];
  auto dump = [&](const char* name, const Mlp& mlp) {
    const int dims[4] = {mlp.inputs(), mlp.hidden(), mlp.hidden(), mlp.outputs()};
    std::size_t offset = 0;
    const auto params = mlp.params();
    for (int layer = 0; layer < 3; ++layer) {
      const int rows = dims[layer + 1];
      const int cols = dims[layer];
      // Stored input-major; printed as (output row, input column).
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const auto at = offset + static_cast<std::size_t>(c) * static_cast<std::size_t>(rows) +
                          static_cast<std::size_t>(r);
          std::snprintf(buf, sizeof(buf), "%.17g", params[at]);
          out << name << ',' << layer + 1 << ",weight," << r << ',' << c << ',' << buf << '\n';
        }
      }
      offset += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
      for (int r = 0; r < rows; ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g", params[offset++]);
        out << name << ',' << layer + 1 << ",bias," << r << ",0," << buf << '\n';
      }
    }
  };
  dump("actor", net.actor);
  dump("critic", net.critic);
}

}  // namespace spectune
